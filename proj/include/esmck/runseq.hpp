#pragma once

#include "esmck/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace esmck::runseq {

struct RunSeqError : Error {
    explicit RunSeqError(const std::string& msg) : Error(msg) {}
};

/// One coupled component with its exported fields and its imports; a lagged
/// import is satisfied by the previous coupling interval's value.
struct ComponentDecl {
    std::string name;
    std::vector<std::string> exports;
    std::vector<std::pair<std::string, bool>> imports;  // (field, lagged)

    bool operator==(const ComponentDecl& o) const {
        return name == o.name && exports == o.exports && imports == o.imports;
    }
};

using Decls = std::vector<ComponentDecl>;

struct Entry {
    enum class Kind { Run, Exchange };
    Kind kind = Kind::Run;
    std::string comp;                 // Run
    std::string from, to;             // Exchange
    std::vector<std::string> fields;  // Exchange

    static Entry run(std::string c) {
        Entry e;
        e.kind = Kind::Run;
        e.comp = std::move(c);
        return e;
    }
    static Entry exchange(std::vector<std::string> fields, std::string from, std::string to) {
        Entry e;
        e.kind = Kind::Exchange;
        e.fields = std::move(fields);
        e.from = std::move(from);
        e.to = std::move(to);
        return e;
    }

    bool operator==(const Entry& o) const {
        return kind == o.kind && comp == o.comp && from == o.from && to == o.to &&
               fields == o.fields;
    }
};

struct RunSequence {
    long long intervalSeconds = 3600;
    std::vector<Entry> entries;

    bool operator==(const RunSequence& o) const {
        return intervalSeconds == o.intervalSeconds && entries == o.entries;
    }
};

enum class Reason {
    ConsumedBeforeProduced,
    ConsumedBeforeExchanged,
    UnknownField,
    DuplicateProducer,
};

inline const char* reasonText(Reason r) {
    switch (r) {
        case Reason::ConsumedBeforeProduced: return "consumed-before-produced";
        case Reason::ConsumedBeforeExchanged: return "consumed-before-exchanged";
        case Reason::UnknownField: return "unknown-field";
        case Reason::DuplicateProducer: return "duplicate-producer";
    }
    throw RunSeqError("bad reason");
}

struct Violation {
    int entryIndex = -1;  // -1 for declaration-level problems
    std::string field;
    Reason reason = Reason::UnknownField;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;

    std::string toText() const {
        if (ok) return "sequence valid\n";
        std::string out = "sequence INVALID:\n";
        for (const auto& v : violations)
            out += "  entry " + std::to_string(v.entryIndex) + ": field " + v.field + ": " +
                   reasonText(v.reason) + "\n";
        return out;
    }

    nlohmann::json toJson() const {
        nlohmann::json vs = nlohmann::json::array();
        for (const auto& v : violations)
            vs.push_back({{"entry", v.entryIndex},
                          {"field", v.field},
                          {"reason", reasonText(v.reason)}});
        return nlohmann::json{{"ok", ok}, {"violations", std::move(vs)}};
    }
};

namespace detail {

inline std::map<std::string, std::string> producerMap(const Decls& decls,
                                                      std::vector<Violation>* out) {
    std::map<std::string, std::string> producer;
    for (const auto& d : decls)
        for (const auto& f : d.exports) {
            auto [it, fresh] = producer.emplace(f, d.name);
            if (!fresh && out)
                out->push_back(Violation{-1, f, Reason::DuplicateProducer});
        }
    return producer;
}

inline const ComponentDecl* findDecl(const Decls& decls, const std::string& name) {
    for (const auto& d : decls)
        if (d.name == name) return &d;
    return nullptr;
}

}  // namespace detail

/// Checks one coupling interval: every unlagged import must have been
/// produced by its exporter's Run and delivered by a later Exchange before
/// the consumer runs; lagged imports are satisfied unconditionally by the
/// previous interval.
inline ValidationReport validateSequence(const RunSequence& seq, const Decls& decls) {
    ValidationReport report;
    auto producer = detail::producerMap(decls, &report.violations);

    std::set<std::string> ran;
    std::set<std::pair<std::string, std::string>> delivered;  // (consumer, field)

    for (std::size_t idx = 0; idx < seq.entries.size(); ++idx) {
        const Entry& e = seq.entries[idx];
        int at = static_cast<int>(idx);
        if (e.kind == Entry::Kind::Run) {
            const ComponentDecl* d = detail::findDecl(decls, e.comp);
            if (!d) {
                report.violations.push_back(Violation{at, e.comp, Reason::UnknownField});
                continue;
            }
            for (const auto& [field, lagged] : d->imports) {
                if (lagged) continue;
                auto p = producer.find(field);
                if (p == producer.end()) {
                    report.violations.push_back(Violation{at, field, Reason::UnknownField});
                } else if (!ran.count(p->second)) {
                    report.violations.push_back(Violation{at, field, Reason::ConsumedBeforeProduced});
                } else if (!delivered.count({e.comp, field})) {
                    report.violations.push_back(Violation{at, field, Reason::ConsumedBeforeExchanged});
                }
            }
            ran.insert(e.comp);
        } else {
            const ComponentDecl* from = detail::findDecl(decls, e.from);
            const ComponentDecl* to = detail::findDecl(decls, e.to);
            for (const auto& f : e.fields) {
                bool exported = from && std::find(from->exports.begin(), from->exports.end(), f) !=
                                            from->exports.end();
                bool imported = false;
                if (to)
                    for (const auto& [field, lagged] : to->imports)
                        if (field == f) imported = true;
                if (!exported || !imported) {
                    report.violations.push_back(Violation{at, f, Reason::UnknownField});
                    continue;
                }
                // An exchange before the producer ran carries the previous
                // interval's value; it satisfies lagged imports only.
                if (ran.count(e.from)) delivered.insert({e.to, f});
            }
        }
    }
    // A component with unlagged imports cannot be skipped: its same-interval
    // consumption never happened. Components with only lagged (or no)
    // imports may sit out an interval.
    for (const auto& d : decls) {
        if (ran.count(d.name)) continue;
        for (const auto& [field, lagged] : d.imports)
            if (!lagged)
                report.violations.push_back(Violation{-1, field, Reason::ConsumedBeforeProduced});
    }
    report.ok = report.violations.empty();
    return report;
}

struct CycleReport {
    std::vector<std::string> components;  // a minimal unlagged dependency cycle
};

/// Builds a valid sequence by deterministic topological order over the
/// unlagged dependency graph (lexicographic tie-break), inserting an
/// Exchange right after each producer's Run for every consumer. Returns the
/// minimal cycle when no valid order exists.
inline std::variant<RunSequence, CycleReport> generateSequence(const Decls& decls,
                                                               long long intervalSeconds = 3600) {
    std::vector<Violation> dup;
    auto producer = detail::producerMap(decls, &dup);
    if (!dup.empty())
        throw RunSeqError("duplicate producer for field " + dup.front().field);

    // Unlagged component graph: producer -> consumer.
    std::map<std::string, std::set<std::string>> succ;
    std::map<std::string, int> indegree;
    for (const auto& d : decls) indegree[d.name] = 0;
    for (const auto& d : decls)
        for (const auto& [field, lagged] : d.imports) {
            if (lagged) continue;
            auto p = producer.find(field);
            if (p == producer.end()) continue;  // reported by validation, not ordering
            if (p->second == d.name) {
                // A component consuming its own same-interval export can never
                // be scheduled; that is a self-cycle.
                return CycleReport{{d.name}};
            }
            if (succ[p->second].insert(d.name).second) indegree[d.name]++;
        }

    std::set<std::string> ready;
    for (const auto& [name, deg] : indegree)
        if (deg == 0) ready.insert(name);

    RunSequence seq;
    seq.intervalSeconds = intervalSeconds;
    std::size_t scheduled = 0;
    while (!ready.empty()) {
        std::string next = *ready.begin();
        ready.erase(ready.begin());
        scheduled++;
        seq.entries.push_back(Entry::run(next));
        // Deliveries from `next`, consumers in lexicographic order, fields in
        // the consumer's import-declaration order.
        std::set<std::string> consumers;
        for (const auto& d : decls)
            for (const auto& [field, lagged] : d.imports) {
                auto p = producer.find(field);
                if (p != producer.end() && p->second == next) consumers.insert(d.name);
            }
        for (const auto& cname : consumers) {
            const ComponentDecl* c = detail::findDecl(decls, cname);
            std::vector<std::string> fields;
            for (const auto& [field, lagged] : c->imports) {
                auto p = producer.find(field);
                if (p != producer.end() && p->second == next) fields.push_back(field);
            }
            seq.entries.push_back(Entry::exchange(std::move(fields), next, cname));
        }
        for (const auto& s : succ[next])
            if (--indegree[s] == 0) ready.insert(s);
    }

    if (scheduled == decls.size()) return seq;

    // Minimal cycle in the unlagged graph: shortest BFS loop, smallest start
    // name on ties.
    std::vector<std::string> best;
    std::vector<std::string> names;
    for (const auto& d : decls) names.push_back(d.name);
    std::sort(names.begin(), names.end());
    for (const auto& start : names) {
        // BFS from start back to start.
        std::map<std::string, std::string> parent;
        std::vector<std::string> queue{start};
        std::set<std::string> seen{start};
        std::optional<std::string> loopEnd;
        for (std::size_t qi = 0; qi < queue.size() && !loopEnd; ++qi) {
            for (const auto& nxt : succ[queue[qi]]) {
                if (nxt == start) {
                    loopEnd = queue[qi];
                    break;
                }
                if (seen.insert(nxt).second) {
                    parent[nxt] = queue[qi];
                    queue.push_back(nxt);
                }
            }
        }
        if (!loopEnd) continue;
        std::vector<std::string> cycle;
        for (std::string at = *loopEnd; at != start; at = parent[at]) cycle.push_back(at);
        cycle.push_back(start);
        std::reverse(cycle.begin(), cycle.end());
        if (best.empty() || cycle.size() < best.size()) best = cycle;
    }
    return CycleReport{best};
}

// ---- text formats -----------------------------------------------------------------
//
// Component file, one component per line ('#' comments allowed):
//   ATM exports precip,radiation imports sst lagged sst
// Sequence file:
//   @3600
//     ATM
//     ATM -> LND :precip,radiation
//     LND
//   @

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> splitFields(const std::string& s, int line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string field = trim(comma == std::string::npos ? s.substr(pos)
                                                            : s.substr(pos, comma - pos));
        if (field.empty())
            throw RunSeqError("empty field name at line " + std::to_string(line));
        out.push_back(field);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline std::vector<std::string> splitWords(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) pos++;
        std::size_t start = pos;
        while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t') pos++;
        if (pos > start) out.push_back(s.substr(start, pos - start));
    }
    return out;
}

}  // namespace detail

inline Decls parseComponents(const std::string& text) {
    Decls decls;
    int lineNo = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = detail::trim(nl == std::string::npos ? text.substr(pos)
                                                                : text.substr(pos, nl - pos));
        lineNo++;
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> words = detail::splitWords(line);
        ComponentDecl d;
        d.name = words[0];
        if (detail::findDecl(decls, d.name))
            throw RunSeqError("duplicate component " + d.name + " at line " + std::to_string(lineNo));
        std::size_t i = 1;
        auto section = [&](const char* kw) -> std::vector<std::string> {
            if (i < words.size() && words[i] == kw) {
                ++i;
                if (i >= words.size())
                    throw RunSeqError(std::string("empty ") + kw + " list at line " +
                                      std::to_string(lineNo));
                // A list is comma-joined; spaces are allowed only around the
                // commas ("a,b", "a, b", "a ,b").
                std::string joined = words[i++];
                while (i < words.size() &&
                       (joined.back() == ',' || words[i].front() == ','))
                    joined += words[i++];
                return detail::splitFields(joined, lineNo);
            }
            return {};
        };
        for (const auto& f : section("exports")) d.exports.push_back(f);
        for (const auto& f : section("imports")) d.imports.emplace_back(f, false);
        for (const auto& f : section("lagged")) d.imports.emplace_back(f, true);
        if (i < words.size())
            throw RunSeqError("unexpected token '" + words[i] + "' at line " +
                              std::to_string(lineNo));
        decls.push_back(std::move(d));
    }
    return decls;
}

inline std::string printComponents(const Decls& decls) {
    std::string out;
    for (const auto& d : decls) {
        out += d.name;
        if (!d.exports.empty()) {
            out += " exports ";
            for (std::size_t i = 0; i < d.exports.size(); ++i)
                out += (i ? "," : "") + d.exports[i];
        }
        std::string unlagged, lagged;
        for (const auto& [f, isLagged] : d.imports) {
            std::string& dst = isLagged ? lagged : unlagged;
            dst += (dst.empty() ? "" : ",") + f;
        }
        if (!unlagged.empty()) out += " imports " + unlagged;
        if (!lagged.empty()) out += " lagged " + lagged;
        out += "\n";
    }
    return out;
}

inline RunSequence parseRunSequence(const std::string& text, const Decls& decls) {
    RunSequence seq;
    bool sawHeader = false;
    bool closed = false;
    int lineNo = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = detail::trim(nl == std::string::npos ? text.substr(pos)
                                                                : text.substr(pos, nl - pos));
        lineNo++;
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        if (line.empty() || line[0] == '#') continue;
        if (!sawHeader) {
            if (line[0] != '@' || line.size() < 2)
                throw RunSeqError("expected '@<seconds>' header at line " + std::to_string(lineNo));
            try {
                seq.intervalSeconds = std::stoll(line.substr(1));
            } catch (...) {
                throw RunSeqError("bad coupling interval at line " + std::to_string(lineNo));
            }
            sawHeader = true;
            continue;
        }
        if (closed)
            throw RunSeqError("content after closing '@' at line " + std::to_string(lineNo));
        if (line == "@") {
            closed = true;
            continue;
        }
        std::size_t arrow = line.find("->");
        if (arrow == std::string::npos) {
            if (!detail::findDecl(decls, line))
                throw RunSeqError("unknown component " + line + " at line " + std::to_string(lineNo));
            seq.entries.push_back(Entry::run(line));
            continue;
        }
        std::string from = detail::trim(line.substr(0, arrow));
        std::size_t colon = line.find(':', arrow);
        if (colon == std::string::npos)
            throw RunSeqError("exchange entry needs ':fields' at line " + std::to_string(lineNo));
        std::string to = detail::trim(line.substr(arrow + 2, colon - arrow - 2));
        if (!detail::findDecl(decls, from))
            throw RunSeqError("unknown component " + from + " at line " + std::to_string(lineNo));
        if (!detail::findDecl(decls, to))
            throw RunSeqError("unknown component " + to + " at line " + std::to_string(lineNo));
        seq.entries.push_back(Entry::exchange(
            detail::splitFields(line.substr(colon + 1), lineNo), from, to));
    }
    if (!sawHeader) throw RunSeqError("missing '@<seconds>' header");
    if (!closed) throw RunSeqError("missing closing '@'");
    return seq;
}

inline std::string printRunSequence(const RunSequence& seq) {
    std::string out = "@" + std::to_string(seq.intervalSeconds) + "\n";
    for (const auto& e : seq.entries) {
        if (e.kind == Entry::Kind::Run) {
            out += "  " + e.comp + "\n";
        } else {
            out += "  " + e.from + " -> " + e.to + " :";
            for (std::size_t i = 0; i < e.fields.size(); ++i) out += (i ? "," : "") + e.fields[i];
            out += "\n";
        }
    }
    out += "@\n";
    return out;
}

inline nlohmann::json sequenceToJson(const RunSequence& seq) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : seq.entries) {
        if (e.kind == Entry::Kind::Run)
            entries.push_back({{"run", e.comp}});
        else
            entries.push_back({{"exchange", e.fields}, {"from", e.from}, {"to", e.to}});
    }
    return nlohmann::json{{"interval_seconds", seq.intervalSeconds}, {"entries", std::move(entries)}};
}

}  // namespace esmck::runseq
