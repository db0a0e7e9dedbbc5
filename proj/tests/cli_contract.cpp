// Golden scenarios for the CLI surface: exit codes for every subcommand,
// report determinism under a fixed seed, and the one-line diagnostics on
// usage errors.
//
//   esmck_cli_contract <path-to-esmck-cli> <corpus-dir>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

std::string gCli;
std::string gCorpus;
fs::path gTmp;
int gFailures = 0;

struct CliResult {
    int exitCode = -1;
    std::string output;
};

CliResult run(const std::string& args) {
    CliResult r;
    FILE* pipe = ::popen((gCli + " " + args + " 2>&1").c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
    int status = ::pclose(pipe);
    if (WIFEXITED(status)) r.exitCode = WEXITSTATUS(status);
    return r;
}

void expect(const std::string& what, bool ok, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) gFailures++;
}

void expectExit(const std::string& args, int code, const char* needle = nullptr) {
    CliResult r = run(args);
    bool ok = r.exitCode == code &&
              (!needle || r.output.find(needle) != std::string::npos);
    expect("exit " + std::to_string(code) + ": esmck " + args, ok,
           "got exit=" + std::to_string(r.exitCode));
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return s;
}

void writeFile(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: esmck_cli_contract <esmck-cli> <corpus-dir>\n");
        return 2;
    }
    gCli = argv[1];
    gCorpus = argv[2];
    gTmp = fs::temp_directory_path() /
           ("esmck_cli_" + std::to_string(static_cast<unsigned>(::getpid())));
    fs::create_directories(gTmp);
    auto corpus = [&](const char* name) { return gCorpus + "/" + name; };

    // check: violation / unknown / usage errors
    expectExit("check " + corpus("kpp_defective.hsl") + " --bound N=2 --bound M=1 --seed 0", 1,
               "VIOLATED assert \"K>0\"");
    expectExit("check " + corpus("kpp_repaired.hsl") +
                   " --bound N=1 --bound M=1 --budget 2000 --seed 0",
               2, "NO VIOLATION FOUND");
    expectExit("check " + corpus("kpp_defective.hsl") + " --bound N=2", 3, "integer input M");
    expectExit("check missing-file.hsl --bound N=1 --bound M=1", 3, "cannot open");
    expectExit("check " + corpus("kpp_defective.hsl") +
                   " --bound N=2 --bound M=1 --backend smt",
               2);  // no solver configured
    expectExit("check " + corpus("kpp_defective.hsl") +
                   " --bound N=2 --bound M=1 --backend smt --solver /nonexistent/prover",
               2);
    expectExit("nonsense-subcommand", 3);
    expectExit("check " + corpus("kpp_defective.hsl") + " --bound N=2 --bound M=oops", 3,
               "bad --bound");

    // falsify is the builtin-only spelling of check
    expectExit("falsify " + corpus("kpp_defective.hsl") + " --bound N=2 --bound M=1", 1);

    // emit-smt
    expectExit("emit-smt " + corpus("kpp_defective.hsl") + " --bound N=2 --bound M=1 -o " +
                   (gTmp / "smt").string(),
               0, "ob006.smt2");
    expectExit("emit-smt " + corpus("kpp_defective.hsl") + " --bound N=2 --bound M=1", 3);

    // grid check
    expectExit("grid check " + corpus("grid_tripolar_8x6.json"), 0, "all topology laws hold");
    writeFile(gTmp / "bad_grid.json", "{\"nx\": 7, \"ny\": 6, \"halo\": 2, "
                                      "\"topology\": \"tripolar\", \"stagger\": \"center\"}");
    expectExit("grid check " + (gTmp / "bad_grid.json").string(), 3, "even nx");
    writeFile(gTmp / "notjson.json", "{oops");
    expectExit("grid check " + (gTmp / "notjson.json").string(), 3);

    // runseq validate / generate
    expectExit("runseq validate " + corpus("components_cesm.txt") + " " +
                   corpus("runseq_cesm.seq"),
               0, "sequence valid");
    writeFile(gTmp / "bad.seq", "@3600\n LND\n ATM\n@\n");
    expectExit("runseq validate " + corpus("components_cesm.txt") + " " +
                   (gTmp / "bad.seq").string(),
               1, "consumed-before-produced");
    writeFile(gTmp / "unknown.seq", "@3600\n XYZ\n@\n");
    expectExit("runseq validate " + corpus("components_cesm.txt") + " " +
                   (gTmp / "unknown.seq").string(),
               3, "unknown component XYZ");
    expectExit("runseq generate " + corpus("components_cesm.txt"), 0, "ATM");
    writeFile(gTmp / "cycle.txt", "A exports x imports y\nB exports y imports x\n");
    expectExit("runseq generate " + (gTmp / "cycle.txt").string(), 1, "dependency cycle");

    // smt backend: a solver that answers unsat for everything proves every
    // obligation, which is the one way to exit 0 from check.
    writeFile(gTmp / "unsat_solver.sh", "echo unsat\n");
    expectExit("check " + corpus("kpp_repaired.hsl") +
                   " --bound N=1 --bound M=1 --backend smt --solver 'sh " +
                   (gTmp / "unsat_solver.sh").string() + "'",
               0, "verdict: VERIFIED");

    // structured output is valid and carries the exit code
    expectExit("check " + corpus("kpp_defective.hsl") +
                   " --bound N=2 --bound M=1 --format structured",
               1, "\"exit\": 1");
    expectExit("grid check " + corpus("grid_tripolar_8x6.json") + " --format structured", 0,
               "\"ok\": true");

    // determinism: identical invocations give byte-identical reports
    {
        std::string args = "check " + corpus("kpp_defective.hsl") +
                           " --bound N=2 --bound M=1 --seed 5 --format structured -o ";
        run(args + (gTmp / "a.json").string());
        run(args + (gTmp / "b.json").string());
        expect("fixed-seed reports are byte-identical",
               !slurp(gTmp / "a.json").empty() &&
                   slurp(gTmp / "a.json") == slurp(gTmp / "b.json"));
    }
    // --jobs does not change the report
    {
        std::string base = "check " + corpus("kpp_repaired.hsl") +
                           " --bound N=2 --bound M=2 --budget 2000 --seed 0 -o ";
        run(base + (gTmp / "j1.txt").string() + " --jobs 1");
        run(base + (gTmp / "j2.txt").string() + " --jobs 2");
        expect("--jobs 2 report matches --jobs 1",
               !slurp(gTmp / "j1.txt").empty() &&
                   slurp(gTmp / "j1.txt") == slurp(gTmp / "j2.txt"));
    }

    std::error_code ec;
    fs::remove_all(gTmp, ec);

    if (gFailures) {
        std::printf("%d CLI contract check(s) FAILED\n", gFailures);
        return 1;
    }
    std::printf("CLI contract holds\n");
    return 0;
}
