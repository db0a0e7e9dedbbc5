// esmck -- bounded checking toolkit for hybrid ESM parameterization models:
// symbolic exploration of HSL models with falsification / SMT emission,
// plus structural verifiers for grid topologies and coupled run sequences.

#include "esmck/grid.hpp"
#include "esmck/ir.hpp"
#include "esmck/kpp.hpp"
#include "esmck/runseq.hpp"
#include "esmck/solve.hpp"
#include "esmck/symexec.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace esmck;

constexpr int kExitVerified = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 3;

struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

std::string readFile(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void writeOutput(const std::string& outPath, const std::string& text) {
    if (outPath.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(outPath);
    if (!f) throw UsageError("cannot write " + outPath);
    f << text;
}

symexec::Bounds parseBounds(const std::vector<std::string>& pairs) {
    symexec::Bounds b;
    for (const auto& s : pairs) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("bad --bound '" + s + "', expected NAME=VALUE");
        std::string name = s.substr(0, eq);
        try {
            b.intInputs[name] = std::stoll(s.substr(eq + 1));
        } catch (...) {
            throw UsageError("bad --bound value in '" + s + "'");
        }
    }
    return b;
}

std::string boundsText(const symexec::Bounds& b) {
    std::string out;
    for (const auto& [k, v] : b.intInputs) {
        if (!out.empty()) out += " ";
        out += k + "=" + std::to_string(v);
    }
    return out.empty() ? "(none)" : out;
}

struct CheckConfig {
    std::string modelPath;
    std::vector<std::string> boundArgs;
    std::string backend = "builtin";
    long long budget = 100000;
    std::uint64_t seed = 0;
    std::string solverCmd;
    int jobs = 1;
    std::string format = "text";
    std::string outPath;
};

void addCheckFlags(CLI::App* cmd, CheckConfig& cfg, bool withBackend) {
    cmd->add_option("model", cfg.modelPath, "HSL model file")->required();
    cmd->add_option("--bound", cfg.boundArgs, "integer input bound NAME=VALUE (repeatable)");
    if (withBackend)
        cmd->add_option("--backend", cfg.backend, "builtin | smt")
            ->check(CLI::IsMember({"builtin", "smt"}));
    cmd->add_option("--budget", cfg.budget, "falsifier sample budget per obligation");
    cmd->add_option("--seed", cfg.seed, "falsifier random seed");
    cmd->add_option("--solver", cfg.solverCmd,
                    "external solver command template ('{}' = file path); "
                    "defaults to $ESMCK_SOLVER");
    cmd->add_option("--jobs", cfg.jobs, "obligations checked in parallel")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--format", cfg.format, "text | structured")
        ->check(CLI::IsMember({"text", "structured"}));
    cmd->add_option("-o,--output", cfg.outPath, "write the report here instead of stdout");
}

struct LoadedModel {
    ir::Program lowered;
    symexec::Bounds bounds;
    symexec::ExploreResult explored;
};

LoadedModel loadAndExplore(const CheckConfig& cfg) {
    LoadedModel m;
    ir::Program p = ir::parseProgram(readFile(cfg.modelPath));
    m.lowered = ir::lowerEvolve(p);
    m.bounds = parseBounds(cfg.boundArgs);
    m.explored = symexec::explore(m.lowered, m.bounds);
    return m;
}

int runCheck(const CheckConfig& cfg) {
    LoadedModel m = loadAndExplore(cfg);

    solve::CheckOptions opts;
    opts.backend = cfg.backend == "smt" ? solve::Backend::Smt : solve::Backend::Builtin;
    opts.falsify.budget = cfg.budget;
    opts.falsify.seed = cfg.seed;
    opts.solver.command = cfg.solverCmd;
    if (opts.solver.command.empty())
        if (const char* env = std::getenv("ESMCK_SOLVER")) opts.solver.command = env;

    const auto& obligations = m.explored.obligations;
    std::vector<solve::Verdict> verdicts(obligations.size());
    std::size_t checked = 0;
    std::optional<std::size_t> firstViolated;

    for (std::size_t wave = 0; wave < obligations.size() && !firstViolated;
         wave += static_cast<std::size_t>(cfg.jobs)) {
        std::size_t end = std::min(obligations.size(), wave + static_cast<std::size_t>(cfg.jobs));
        std::vector<std::future<solve::Verdict>> futures;
        for (std::size_t i = wave; i < end; ++i)
            futures.push_back(std::async(std::launch::async, [&, i] {
                return solve::checkObligation(m.lowered, m.bounds, obligations[i], opts);
            }));
        for (std::size_t i = wave; i < end; ++i) {
            verdicts[i] = futures[i - wave].get();
            checked++;
        }
        for (std::size_t i = wave; i < end && !firstViolated; ++i)
            if (verdicts[i].kind == solve::VerdictKind::Violated) firstViolated = i;
    }

    long long proved = 0, unknown = 0;
    for (std::size_t i = 0; i < checked; ++i) {
        if (verdicts[i].kind == solve::VerdictKind::HoldsProved) proved++;
        if (verdicts[i].kind == solve::VerdictKind::Unknown) unknown++;
    }

    int exitCode;
    if (firstViolated)
        exitCode = kExitViolation;
    else if (unknown == 0 && checked == obligations.size() && m.explored.summary.complete)
        exitCode = kExitVerified;
    else
        exitCode = kExitUnknown;

    std::string report;
    if (cfg.format == "structured") {
        nlohmann::json j{
            {"model", cfg.modelPath},
            {"bounds", m.bounds.intInputs},
            {"backend", cfg.backend},
            {"seed", cfg.seed},
            {"budget", cfg.budget},
            {"summary",
             {{"paths", m.explored.summary.paths},
              {"obligations", m.explored.summary.obligations},
              {"pruned_infeasible", m.explored.summary.prunedInfeasible},
              {"complete", m.explored.summary.complete}}},
            {"checked", checked},
            {"proved", proved},
            {"unknown", unknown},
            {"exit", exitCode},
        };
        if (firstViolated) {
            const auto& o = obligations[*firstViolated];
            const auto& v = verdicts[*firstViolated];
            j["violation"] = {
                {"obligation", o.id},
                {"label", o.label},
                {"budget_spent", v.budgetSpent},
                {"witness", solve::witnessToJson(*v.witness)},
            };
        }
        report = j.dump(2) + "\n";
    } else {
        report += "model: " + cfg.modelPath + "\n";
        report += "bounds: " + boundsText(m.bounds) + "\n";
        report += "backend: " + cfg.backend + " seed=" + std::to_string(cfg.seed) +
                  " budget=" + std::to_string(cfg.budget) + "\n";
        report += m.explored.summary.toText();
        if (firstViolated) {
            const auto& o = obligations[*firstViolated];
            const auto& v = verdicts[*firstViolated];
            report += "obligation " + std::to_string(o.id) + ": VIOLATED assert \"" + o.label +
                      "\" (budget spent: " + std::to_string(v.budgetSpent) + ")\n";
            report += "witness (validated by exact replay):\n";
            for (const auto& [name, value] : v.witness->assignment)
                report += "  " + name + " = " + value.str() + "\n";
            if (!v.witness->choices.empty()) {
                report += "choices:";
                for (long long c : v.witness->choices) report += " " + std::to_string(c);
                report += "\n";
            }
            report += "verdict: VIOLATION assert \"" + o.label + "\"\n";
        } else if (exitCode == kExitVerified) {
            report += "checked " + std::to_string(checked) + " obligations: all proved unsat\n";
            report += "verdict: VERIFIED\n";
        } else {
            report += "checked " + std::to_string(checked) + " obligations: " +
                      std::to_string(proved) + " proved, " + std::to_string(unknown) +
                      " unknown\n";
            report += "verdict: NO VIOLATION FOUND (not a proof)\n";
        }
    }
    writeOutput(cfg.outPath, report);
    return exitCode;
}

int runEmitSmt(const CheckConfig& cfg) {
    if (cfg.outPath.empty()) throw UsageError("emit-smt requires -o <directory>");
    LoadedModel m = loadAndExplore(cfg);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.outPath);
    std::string index;
    for (const auto& o : m.explored.obligations) {
        char name[32];
        std::snprintf(name, sizeof(name), "ob%03d.smt2", o.id);
        std::ofstream f(fs::path(cfg.outPath) / name);
        if (!f) throw UsageError(std::string("cannot write ") + name);
        f << solve::emitSmt(o);
        index += std::string(name) + "  assert \"" + o.label + "\"\n";
    }
    std::cout << index;
    std::cout << "wrote " << m.explored.obligations.size() << " obligations to " << cfg.outPath
              << "\n";
    return kExitVerified;
}

int runGridCheck(const std::string& path, const std::string& format,
                 const std::string& outPath) {
    grid::GridSpec spec = grid::specFromJson(nlohmann::json::parse(readFile(path)));
    grid::TopologyReport report = grid::checkTopology(spec);
    if (format == "structured") {
        nlohmann::json j = report.toJson();
        j["spec"] = grid::specToJson(spec);
        writeOutput(outPath, j.dump(2) + "\n");
    } else {
        std::string text = "grid: " + std::string(grid::topologyName(spec.topology)) + " " +
                           std::to_string(spec.nx) + "x" + std::to_string(spec.ny) + " halo " +
                           std::to_string(spec.halo) + " stagger " +
                           grid::staggerName(spec.stagger) + "\n";
        text += report.toText();
        text += report.ok() ? "verdict: all topology laws hold\n"
                            : "verdict: topology law violated\n";
        writeOutput(outPath, text);
    }
    return report.ok() ? kExitVerified : kExitViolation;
}

int runSeqValidate(const std::string& compPath, const std::string& seqPath,
                   const std::string& format, const std::string& outPath) {
    runseq::Decls decls = runseq::parseComponents(readFile(compPath));
    runseq::RunSequence seq = runseq::parseRunSequence(readFile(seqPath), decls);
    runseq::ValidationReport report = runseq::validateSequence(seq, decls);
    if (format == "structured")
        writeOutput(outPath, report.toJson().dump(2) + "\n");
    else
        writeOutput(outPath, report.toText());
    return report.ok ? kExitVerified : kExitViolation;
}

int runSeqGenerate(const std::string& compPath, long long interval, const std::string& format,
                   const std::string& outPath) {
    runseq::Decls decls = runseq::parseComponents(readFile(compPath));
    auto result = runseq::generateSequence(decls, interval);
    if (std::holds_alternative<runseq::CycleReport>(result)) {
        const auto& cycle = std::get<runseq::CycleReport>(result);
        if (format == "structured") {
            writeOutput(outPath, nlohmann::json{{"ok", false}, {"cycle", cycle.components}}.dump(2) + "\n");
        } else {
            std::string text = "no valid sequence: unlagged dependency cycle:";
            for (const auto& c : cycle.components) text += " " + c;
            writeOutput(outPath, text + "\n");
        }
        return kExitViolation;
    }
    const auto& seq = std::get<runseq::RunSequence>(result);
    if (format == "structured")
        writeOutput(outPath, runseq::sequenceToJson(seq).dump(2) + "\n");
    else
        writeOutput(outPath, runseq::printRunSequence(seq));
    return kExitVerified;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"esmck: bounded model checking toolkit for ESM parameterizations"};
    app.require_subcommand(1);

    CheckConfig checkCfg;
    CLI::App* check = app.add_subcommand("check", "explore a model and check every obligation");
    addCheckFlags(check, checkCfg, true);

    CheckConfig falsifyCfg;
    CLI::App* falsify =
        app.add_subcommand("falsify", "search for assertion violations (builtin backend)");
    addCheckFlags(falsify, falsifyCfg, false);

    CheckConfig emitCfg;
    CLI::App* emit = app.add_subcommand("emit-smt", "write one SMT-LIB2 file per obligation");
    emit->add_option("model", emitCfg.modelPath, "HSL model file")->required();
    emit->add_option("--bound", emitCfg.boundArgs, "integer input bound NAME=VALUE (repeatable)");
    emit->add_option("-o,--output", emitCfg.outPath, "output directory")->required();

    CLI::App* gridCmd = app.add_subcommand("grid", "grid topology tools");
    gridCmd->require_subcommand(1);
    std::string gridPath, gridFormat = "text", gridOut;
    CLI::App* gridCheck = gridCmd->add_subcommand("check", "check every topology law of a grid");
    gridCheck->add_option("spec", gridPath, "grid spec JSON file")->required();
    gridCheck->add_option("--format", gridFormat, "text | structured")
        ->check(CLI::IsMember({"text", "structured"}));
    gridCheck->add_option("-o,--output", gridOut, "write the report here instead of stdout");

    CLI::App* runseqCmd = app.add_subcommand("runseq", "run sequencing tools");
    runseqCmd->require_subcommand(1);
    std::string rsComp, rsSeq, rsFormat = "text", rsOut;
    long long rsInterval = 3600;
    CLI::App* rsValidate =
        runseqCmd->add_subcommand("validate", "validate a run sequence against declarations");
    rsValidate->add_option("components", rsComp, "component declaration file")->required();
    rsValidate->add_option("sequence", rsSeq, "run sequence file")->required();
    rsValidate->add_option("--format", rsFormat, "text | structured")
        ->check(CLI::IsMember({"text", "structured"}));
    rsValidate->add_option("-o,--output", rsOut, "write the report here instead of stdout");
    CLI::App* rsGenerate =
        runseqCmd->add_subcommand("generate", "generate a valid run sequence from declarations");
    rsGenerate->add_option("components", rsComp, "component declaration file")->required();
    rsGenerate->add_option("--interval", rsInterval, "coupling interval in seconds");
    rsGenerate->add_option("--format", rsFormat, "text | structured")
        ->check(CLI::IsMember({"text", "structured"}));
    rsGenerate->add_option("-o,--output", rsOut, "write the sequence here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (check->parsed()) return runCheck(checkCfg);
        if (falsify->parsed()) {
            falsifyCfg.backend = "builtin";
            return runCheck(falsifyCfg);
        }
        if (emit->parsed()) return runEmitSmt(emitCfg);
        if (gridCmd->parsed() && gridCheck->parsed())
            return runGridCheck(gridPath, gridFormat, gridOut);
        if (runseqCmd->parsed() && rsValidate->parsed())
            return runSeqValidate(rsComp, rsSeq, rsFormat, rsOut);
        if (runseqCmd->parsed() && rsGenerate->parsed())
            return runSeqGenerate(rsComp, rsInterval, rsFormat, rsOut);
        std::cerr << "esmck: no subcommand\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "esmck: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "esmck: bad input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "esmck: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "esmck: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
