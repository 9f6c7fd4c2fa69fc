#include "dmdlab/snapshots.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "dmdlab/csv.hpp"

namespace dmdlab {

void TimeGrid::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DegenerateInput("TimeGrid: dt must be positive and finite");
    if (!std::isfinite(t0)) throw DegenerateInput("TimeGrid: t0 must be finite");
    if (count < 2) throw InsufficientData("TimeGrid: need at least two samples");
}

SnapshotSet::SnapshotSet(TimeGrid grid, Eigen::MatrixXd states)
    : grid_(grid), states_(std::move(states)) {
    grid_.validate();
    if (static_cast<std::size_t>(states_.cols()) != grid_.count)
        throw IndexError("SnapshotSet: state count does not match the time grid");
    if (states_.rows() < 1) throw DegenerateInput("SnapshotSet: empty state vectors");
    if (!states_.allFinite()) throw DegenerateInput("SnapshotSet: non-finite state entry");
}

Eigen::VectorXd SnapshotSet::state(std::size_t i) const {
    if (i >= grid_.count) throw IndexError("SnapshotSet: snapshot index out of range");
    return states_.col(static_cast<Eigen::Index>(i));
}

DataPair build_data_pair(const SnapshotSet& s) {
    if (s.count() < 2) throw InsufficientData("build_data_pair: need at least two snapshots");
    const Eigen::Index m = static_cast<Eigen::Index>(s.count()) - 1;
    DataPair d;
    d.X = s.states().leftCols(m);
    d.Y = s.states().rightCols(m);
    return d;
}

SnapshotSet slice_window(const SnapshotSet& s, std::size_t first, std::size_t n) {
    if (n < 2) throw InsufficientData("slice_window: a window needs at least two snapshots");
    if (first + n > s.count()) throw IndexError("slice_window: window exceeds trajectory");
    TimeGrid g{s.grid().time(first), s.grid().dt, n};
    return SnapshotSet(g, s.states().middleCols(static_cast<Eigen::Index>(first),
                                                static_cast<Eigen::Index>(n)));
}

namespace {

constexpr char kMagic[4] = {'D', 'M', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "snapshot files are little-endian; this build targets LE hosts");

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError(std::string("snapshot file truncated while reading ") + what);
    return v;
}

} // namespace

void save_snapshots(const SnapshotSet& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_snapshots: cannot open '" + path + "'");
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(s.dim()));
    write_pod(out, static_cast<std::uint64_t>(s.count()));
    write_pod(out, s.grid().t0);
    write_pod(out, s.grid().dt);
    // Eigen stores column-major, which is exactly the file layout.
    out.write(reinterpret_cast<const char*>(s.states().data()),
              static_cast<std::streamsize>(sizeof(double) * s.states().size()));
    if (!out) throw FormatError("save_snapshots: write failed for '" + path + "'");
}

SnapshotSet load_snapshots(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_snapshots: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("load_snapshots: bad magic in '" + path + "'");
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion)
        throw FormatError("load_snapshots: unsupported version " + std::to_string(version));
    const auto dim = read_pod<std::uint64_t>(in, "dim");
    const auto count = read_pod<std::uint64_t>(in, "count");
    const double t0 = read_pod<double>(in, "t0");
    const double dt = read_pod<double>(in, "dt");
    if (dim == 0 || count == 0) throw FormatError("load_snapshots: empty payload declared");

    Eigen::MatrixXd states(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
    in.read(reinterpret_cast<char*>(states.data()),
            static_cast<std::streamsize>(sizeof(double) * dim * count));
    if (!in) throw FormatError("load_snapshots: payload truncated in '" + path + "'");
    return SnapshotSet(TimeGrid{t0, dt, static_cast<std::size_t>(count)}, std::move(states));
}

void export_snapshots_csv(const SnapshotSet& s, const std::string& path) {
    csv::Writer w(path);
    std::vector<std::string> names{"t"};
    for (Eigen::Index c = 0; c < s.dim(); ++c) names.push_back("c" + std::to_string(c));
    w.header(names);
    std::vector<double> row(static_cast<std::size_t>(s.dim()) + 1);
    for (std::size_t i = 0; i < s.count(); ++i) {
        row[0] = s.grid().time(i);
        for (Eigen::Index c = 0; c < s.dim(); ++c)
            row[static_cast<std::size_t>(c) + 1] = s.states()(c, static_cast<Eigen::Index>(i));
        w.row(row);
    }
}

} // namespace dmdlab
