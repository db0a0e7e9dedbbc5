#pragma once

#include "esmck/rational.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace esmck::grid {

struct GridError : Error {
    explicit GridError(const std::string& msg) : Error(msg) {}
};

enum class Topology { Closed, PeriodicX, Tripolar };
enum class Stagger { Center, EastEdge, NorthEdge, Corner };

inline const char* topologyName(Topology t) {
    switch (t) {
        case Topology::Closed: return "closed";
        case Topology::PeriodicX: return "periodicX";
        case Topology::Tripolar: return "tripolar";
    }
    throw GridError("bad topology");
}

inline const char* staggerName(Stagger s) {
    switch (s) {
        case Stagger::Center: return "center";
        case Stagger::EastEdge: return "eastEdge";
        case Stagger::NorthEdge: return "northEdge";
        case Stagger::Corner: return "corner";
    }
    throw GridError("bad stagger");
}

/// Logically rectangular grid with an optional east-west wrap and tripolar
/// north fold. Index conventions (0-based):
///   center:    nx columns, ny rows
///   eastEdge:  nx columns (edge nx is edge 0 under the wrap), ny rows
///   northEdge: nx columns, ny+1 rows; the top row lies on the fold line
///   corner:    nx columns (wrapped), ny+1 rows; top row on the fold line
struct GridSpec {
    int nx = 0;
    int ny = 0;
    int halo = 1;
    Topology topology = Topology::Closed;
    Stagger stagger = Stagger::Center;

    void validate() const {
        if (nx <= 0 || ny <= 0) throw GridError("grid dimensions must be positive");
        if (halo < 1) throw GridError("halo width must be at least 1");
        if (halo >= std::min(nx, ny))
            throw GridError("halo width must be smaller than min(nx, ny)");
        if (topology == Topology::Tripolar && nx % 2 != 0)
            throw GridError("tripolar topology requires an even nx (the fold pairs columns)");
    }

    int cols() const { return nx; }
    int rows() const {
        return (stagger == Stagger::NorthEdge || stagger == Stagger::Corner) ? ny + 1 : ny;
    }
    bool interior(int i, int j) const {
        return i >= 0 && i < cols() && j >= 0 && j < rows();
    }
    bool inPaddedBox(int i, int j) const {
        return i >= -halo && i < cols() + halo && j >= -halo && j < rows() + halo;
    }

    /// Column reflection across the fold. An involution on [0, nx).
    int foldI(int i) const {
        if (stagger == Stagger::Center || stagger == Stagger::NorthEdge) return nx - 1 - i;
        return (nx - i) % nx;  // edge/corner columns: column 0 is self-paired
    }
    /// Row reflection for a north-halo row (j >= rows()).
    int foldJ(int j) const {
        if (stagger == Stagger::Center || stagger == Stagger::EastEdge) return 2 * rows() - 1 - j;
        return 2 * (rows() - 1) - j;  // top row sits on the fold line
    }
};

/// Interior cell that owns a position, with the orientation factor picked up
/// across the fold (applied to vector-tagged fields only).
struct OwnedRef {
    int i = 0;
    int j = 0;
    int sign = 1;

    bool operator==(const OwnedRef& o) const { return i == o.i && j == o.j && sign == o.sign; }
};

struct Owner {
    bool boundary = false;  // no neighbor under this topology (domain wall)
    OwnedRef ref;

    bool operator==(const Owner& o) const {
        if (boundary != o.boundary) return false;
        return boundary || ref == o.ref;
    }
};

/// Owner of position (i, j), which may lie in the halo ring. East-west wrap
/// for periodicX/tripolar, north fold for tripolar; the south edge is a wall
/// under every topology, as are north/east/west where the topology has no
/// neighbor there.
inline Owner ownerOf(const GridSpec& spec, int i, int j) {
    spec.validate();
    if (!spec.inPaddedBox(i, j))
        throw GridError("position (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") is deeper than the halo width");
    if (spec.interior(i, j)) return Owner{false, {i, j, 1}};

    int cols = spec.cols();
    int rows = spec.rows();
    int iw = i;
    if (i < 0 || i >= cols) {
        if (spec.topology == Topology::Closed) return Owner{true, {}};
        iw = ((i % cols) + cols) % cols;
    }
    if (j < 0) return Owner{true, {}};
    if (j >= rows) {
        if (spec.topology != Topology::Tripolar) return Owner{true, {}};
        return Owner{false, {spec.foldI(iw), spec.foldJ(j), -1}};
    }
    return Owner{false, {iw, j, 1}};
}

/// Materialized ownerOf over the padded box, indexable by halo positions.
struct OwnerMap {
    GridSpec spec;
    std::vector<Owner> entries;  // row-major over the padded box

    std::size_t indexOf(int i, int j) const {
        int width = spec.cols() + 2 * spec.halo;
        return static_cast<std::size_t>((j + spec.halo) * width + (i + spec.halo));
    }
    const Owner& at(int i, int j) const { return entries[indexOf(i, j)]; }
    Owner& at(int i, int j) { return entries[indexOf(i, j)]; }
};

inline OwnerMap buildOwnerMap(const GridSpec& spec) {
    spec.validate();
    OwnerMap map;
    map.spec = spec;
    int width = spec.cols() + 2 * spec.halo;
    int height = spec.rows() + 2 * spec.halo;
    map.entries.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int j = -spec.halo; j < spec.rows() + spec.halo; ++j)
        for (int i = -spec.halo; i < spec.cols() + spec.halo; ++i)
            map.at(i, j) = ownerOf(spec, i, j);
    return map;
}

/// Field over the padded box. Interior values are the data; halo values are
/// filled by haloExchange.
template <typename T>
struct Field {
    GridSpec spec;
    bool vectorTagged = false;
    std::vector<T> data;

    explicit Field(const GridSpec& s, bool isVector = false)
        : spec(s), vectorTagged(isVector) {
        spec.validate();
        int width = spec.cols() + 2 * spec.halo;
        int height = spec.rows() + 2 * spec.halo;
        data.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), T{});
    }

    T& at(int i, int j) {
        int width = spec.cols() + 2 * spec.halo;
        return data[static_cast<std::size_t>((j + spec.halo) * width + (i + spec.halo))];
    }
    const T& at(int i, int j) const {
        int width = spec.cols() + 2 * spec.halo;
        return data[static_cast<std::size_t>((j + spec.halo) * width + (i + spec.halo))];
    }

    void fillInterior(const std::function<T(int, int)>& f) {
        for (int j = 0; j < spec.rows(); ++j)
            for (int i = 0; i < spec.cols(); ++i) at(i, j) = f(i, j);
    }
};

/// Copies sign * value(owner) into every owned halo position; interior and
/// boundary positions are untouched. Idempotent: the halo reads interior
/// values only.
template <typename T>
Field<T> haloExchange(const OwnerMap& map, Field<T> field) {
    const GridSpec& spec = map.spec;
    for (int j = -spec.halo; j < spec.rows() + spec.halo; ++j) {
        for (int i = -spec.halo; i < spec.cols() + spec.halo; ++i) {
            if (spec.interior(i, j)) continue;
            const Owner& o = map.at(i, j);
            if (o.boundary) continue;
            T v = field.at(o.ref.i, o.ref.j);
            if (field.vectorTagged && o.ref.sign < 0) v = -v;
            field.at(i, j) = v;
        }
    }
    return field;
}

template <typename T>
Field<T> haloExchange(const GridSpec& spec, Field<T> field) {
    return haloExchange(buildOwnerMap(spec), std::move(field));
}

// ---- topology laws ------------------------------------------------------------

struct LawResult {
    std::string name;
    bool pass = true;
    long long checked = 0;
    std::string counterexample;  // first failure, empty when pass
    std::string note;

    LawResult() = default;
    explicit LawResult(std::string n) : name(std::move(n)) {}

    void fail(const std::string& cx) {
        if (pass) counterexample = cx;
        pass = false;
    }
};

struct TopologyReport {
    std::vector<LawResult> laws;

    bool ok() const {
        for (const auto& l : laws)
            if (!l.pass) return false;
        return true;
    }

    std::string toText() const {
        std::string out;
        for (const auto& l : laws) {
            out += l.pass ? "[PASS] " : "[FAIL] ";
            out += l.name + " (" + std::to_string(l.checked) + " checks)";
            if (!l.pass) out += " first counterexample: " + l.counterexample;
            if (!l.note.empty()) out += " -- " + l.note;
            out += "\n";
        }
        return out;
    }

    nlohmann::json toJson() const {
        nlohmann::json laws_ = nlohmann::json::array();
        for (const auto& l : laws) {
            nlohmann::json entry{
                {"law", l.name}, {"pass", l.pass}, {"checked", l.checked}};
            if (!l.pass) entry["counterexample"] = l.counterexample;
            if (!l.note.empty()) entry["note"] = l.note;
            laws_.push_back(std::move(entry));
        }
        return nlohmann::json{{"ok", ok()}, {"laws", std::move(laws_)}};
    }
};

namespace detail {

inline std::string posText(int i, int j) {
    return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace detail

/// Validates the topology laws against a given owner map (which may have
/// been tampered with -- the laws themselves catch mutations, the map is
/// never compared against the analytic formula here).
inline TopologyReport validateOwnerMap(const OwnerMap& map) {
    const GridSpec& spec = map.spec;
    spec.validate();
    const int cols = spec.cols();
    const int rows = spec.rows();
    const int halo = spec.halo;
    const bool tripolar = spec.topology == Topology::Tripolar;

    TopologyReport report;

    LawResult interiorIdentity{"interior-identity"};
    for (int j = 0; j < rows; ++j)
        for (int i = 0; i < cols; ++i) {
            interiorIdentity.checked++;
            const Owner& o = map.at(i, j);
            if (o.boundary || !(o.ref == OwnedRef{i, j, 1}))
                interiorIdentity.fail(detail::posText(i, j));
        }

    LawResult ownerStable{"owner-of-owner-stability"};
    long long boundaryCount = 0;
    for (int j = -halo; j < rows + halo; ++j)
        for (int i = -halo; i < cols + halo; ++i) {
            const Owner& o = map.at(i, j);
            if (o.boundary) {
                boundaryCount++;
                continue;
            }
            ownerStable.checked++;
            if (!spec.interior(o.ref.i, o.ref.j)) {
                ownerStable.fail(detail::posText(i, j) + " owner not interior");
                continue;
            }
            const Owner& oo = map.at(o.ref.i, o.ref.j);
            if (oo.boundary || !(oo.ref == OwnedRef{o.ref.i, o.ref.j, 1}))
                ownerStable.fail(detail::posText(i, j) + " owner-of-owner not identity");
        }
    if (boundaryCount)
        ownerStable.note = std::to_string(boundaryCount) + " boundary positions";

    LawResult foldInvolution{"fold-involution"};
    for (int i = 0; i < cols; ++i) {
        foldInvolution.checked++;
        if (spec.foldI(spec.foldI(i)) != i)
            foldInvolution.fail("column " + std::to_string(i));
    }

    LawResult wrapInvariance{"wrap-invariance"};
    if (spec.topology != Topology::Closed) {
        for (int j = -halo; j < rows + halo; ++j)
            for (int i = -halo; i < cols + halo; ++i) {
                if (i >= 0 && i < cols) continue;
                if (j < 0) continue;  // south wall
                int iw = ((i % cols) + cols) % cols;
                wrapInvariance.checked++;
                if (!(map.at(i, j) == map.at(iw, j)))
                    wrapInvariance.fail(detail::posText(i, j));
            }
    } else {
        wrapInvariance.note = "vacuous for closed topology";
    }

    LawResult wrapBijection{"wrap-bijection"};
    if (spec.topology != Topology::Closed) {
        for (int side = 0; side < 2; ++side) {
            for (int k = 1; k <= halo; ++k) {
                int c = side == 0 ? -k : cols - 1 + k;
                int target = ((c % cols) + cols) % cols;
                std::vector<bool> hit(static_cast<std::size_t>(rows), false);
                bool columnOk = true;
                for (int j = 0; j < rows; ++j) {
                    wrapBijection.checked++;
                    const Owner& o = map.at(c, j);
                    if (o.boundary || o.ref.i != target || o.ref.j < 0 || o.ref.j >= rows ||
                        hit[static_cast<std::size_t>(o.ref.j)]) {
                        columnOk = false;
                        wrapBijection.fail("column " + std::to_string(c) + " row " +
                                           std::to_string(j));
                        break;
                    }
                    hit[static_cast<std::size_t>(o.ref.j)] = true;
                }
                (void)columnOk;
            }
        }
    } else {
        wrapBijection.note = "vacuous for closed topology";
    }

    LawResult foldCoverage{"fold-coverage"};
    if (tripolar) {
        for (int k = 0; k < halo; ++k) {
            int j = rows + k;
            int expectRow = spec.foldJ(j);
            std::vector<int> ownersPerColumn(static_cast<std::size_t>(cols), 0);
            for (int i = 0; i < cols; ++i) {
                foldCoverage.checked++;
                const Owner& o = map.at(i, j);
                if (o.boundary || o.ref.j != expectRow) {
                    foldCoverage.fail(detail::posText(i, j) + " expected owner row " +
                                      std::to_string(expectRow));
                    continue;
                }
                ownersPerColumn[static_cast<std::size_t>(o.ref.i)]++;
            }
            for (int i = 0; i < cols; ++i)
                if (ownersPerColumn[static_cast<std::size_t>(i)] != 1)
                    foldCoverage.fail("interior " + detail::posText(i, expectRow) + " owns " +
                                      std::to_string(ownersPerColumn[static_cast<std::size_t>(i)]) +
                                      " positions of fold-halo row " + std::to_string(j));
        }
    } else {
        foldCoverage.note = "vacuous without a tripolar fold";
    }

    LawResult signConsistency{"sign-consistency"};
    for (int j = -halo; j < rows + halo; ++j)
        for (int i = -halo; i < cols + halo; ++i) {
            const Owner& o = map.at(i, j);
            if (o.boundary) continue;
            signConsistency.checked++;
            bool crossedFold = tripolar && j >= rows;
            int expected = crossedFold ? -1 : 1;
            if (o.ref.sign != expected) signConsistency.fail(detail::posText(i, j));
        }

    LawResult boundaryCorrect{"boundary-correctness"};
    for (int j = -halo; j < rows + halo; ++j)
        for (int i = -halo; i < cols + halo; ++i) {
            if (spec.interior(i, j)) continue;
            boundaryCorrect.checked++;
            bool expectBoundary = false;
            if (j < 0) expectBoundary = true;
            if (j >= rows && !tripolar) expectBoundary = true;
            if ((i < 0 || i >= cols) && spec.topology == Topology::Closed) expectBoundary = true;
            if (map.at(i, j).boundary != expectBoundary)
                boundaryCorrect.fail(detail::posText(i, j));
        }

    report.laws = {interiorIdentity, ownerStable,   foldInvolution, wrapInvariance,
                   wrapBijection,    foldCoverage,  signConsistency, boundaryCorrect};
    return report;
}

/// Builds the owner map for the spec and checks every topology law on it.
inline TopologyReport checkTopology(const GridSpec& spec) {
    return validateOwnerMap(buildOwnerMap(spec));
}

// ---- structured-text interface ---------------------------------------------------

inline GridSpec specFromJson(const nlohmann::json& j) {
    GridSpec spec;
    spec.nx = j.at("nx").get<int>();
    spec.ny = j.at("ny").get<int>();
    spec.halo = j.at("halo").get<int>();
    std::string topo = j.at("topology").get<std::string>();
    if (topo == "closed") spec.topology = Topology::Closed;
    else if (topo == "periodicX") spec.topology = Topology::PeriodicX;
    else if (topo == "tripolar") spec.topology = Topology::Tripolar;
    else throw GridError("unknown topology: " + topo);
    std::string stag = j.value("stagger", "center");
    if (stag == "center") spec.stagger = Stagger::Center;
    else if (stag == "eastEdge") spec.stagger = Stagger::EastEdge;
    else if (stag == "northEdge") spec.stagger = Stagger::NorthEdge;
    else if (stag == "corner") spec.stagger = Stagger::Corner;
    else throw GridError("unknown stagger: " + stag);
    spec.validate();
    return spec;
}

inline nlohmann::json specToJson(const GridSpec& spec) {
    return nlohmann::json{{"nx", spec.nx},
                          {"ny", spec.ny},
                          {"halo", spec.halo},
                          {"topology", topologyName(spec.topology)},
                          {"stagger", staggerName(spec.stagger)}};
}

}  // namespace esmck::grid
