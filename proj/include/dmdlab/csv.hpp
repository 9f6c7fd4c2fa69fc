#pragma once

// Small CSV writing helpers.  Numbers are printed with std::to_chars so the
// output is locale-independent, round-trips exactly, and is bit-identical
// across runs — the determinism contract for every exported artifact.

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "dmdlab/errors.hpp"

namespace dmdlab::csv {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("csv: failed to format double");
    return std::string(buf, ptr);
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path) {
        if (!out_) throw Error("csv: cannot open '" + path + "' for writing");
    }

    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) out_ << ',';
            out_ << names[i];
        }
        out_ << '\n';
    }

    /// One row: optional leading label cells followed by numeric cells.
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(values[i]);
        }
        out_ << '\n';
    }

    void row(const std::vector<std::string>& labels, const std::vector<double>& values) {
        bool first = true;
        for (const auto& l : labels) {
            if (!first) out_ << ',';
            out_ << l;
            first = false;
        }
        for (const double v : values) {
            if (!first) out_ << ',';
            out_ << format_double(v);
            first = false;
        }
        out_ << '\n';
    }

    void close() { out_.close(); }

private:
    std::ofstream out_;
};

} // namespace dmdlab::csv
