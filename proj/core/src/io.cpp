#include "mdmc/io.hpp"

#include "mdmc/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace mdmc::io {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct MmHeader {
    bool pattern = false;  // "pattern" instead of "real"
};

// Parses the banner and skips comment lines; on return the stream is
// positioned at the size line. line counts consumed lines.
MmHeader read_mm_banner(std::istream& in, long& line) {
    std::string banner;
    if (!std::getline(in, banner)) throw ParseError("empty file", 1);
    line = 1;
    std::istringstream bs(banner);
    std::string tag, object, format, field, symmetry;
    bs >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket")
        throw ParseError("missing %%MatrixMarket banner", line);
    if (lower(object) != "matrix" || lower(format) != "coordinate")
        throw ParseError("expected 'matrix coordinate' header", line);
    const std::string f = lower(field);
    if (f != "real" && f != "pattern")
        throw ParseError("expected field 'real' or 'pattern', got '" + field + "'", line);
    if (lower(symmetry) != "symmetric")
        throw ParseError("expected 'symmetric' symmetry, got '" + symmetry + "'", line);
    return {f == "pattern"};
}

bool next_content_line(std::istream& in, std::string& out, long& line) {
    while (std::getline(in, out)) {
        ++line;
        const auto pos = out.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;  // blank
        if (out[pos] == '%') continue;           // comment
        return true;
    }
    return false;
}

struct MmBody {
    Index n = 0;
    std::vector<IndexPair> pairs;
    std::vector<double> vals;
    bool pattern = false;
};

MmBody read_mm_body(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    long line = 0;
    const MmHeader hdr = read_mm_banner(in, line);

    std::string s;
    if (!next_content_line(in, s, line)) throw ParseError("missing size line", line);
    std::istringstream sz(s);
    long rows = 0, cols = 0, nnz = 0;
    if (!(sz >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
        throw ParseError("bad size line '" + s + "'", line);
    if (rows != cols) throw ParseError("matrix is not square", line);

    MmBody body;
    body.n = rows;
    body.pattern = hdr.pattern;
    body.pairs.reserve(nnz);
    if (!hdr.pattern) body.vals.reserve(nnz);
    for (long k = 0; k < nnz; ++k) {
        if (!next_content_line(in, s, line))
            throw ParseError("expected " + std::to_string(nnz) + " entries, got " +
                                 std::to_string(k), line);
        std::istringstream es(s);
        long i = 0, j = 0;
        double v = 0.0;
        if (!(es >> i >> j)) throw ParseError("bad entry line '" + s + "'", line);
        if (!hdr.pattern && !(es >> v))
            throw ParseError("missing value in entry line '" + s + "'", line);
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw ParseError("entry index out of range in '" + s + "'", line);
        body.pairs.emplace_back(i - 1, j - 1);
        if (!hdr.pattern) body.vals.push_back(v);
    }
    return body;
}

}  // namespace

SparseSymMatrix read_matrix_market(const std::string& path) {
    MmBody body = read_mm_body(path);
    if (body.pattern)
        throw Error("'" + path + "' is a pattern file; values required here");
    auto pat = std::make_shared<SparsityPattern>(
        SparsityPattern::build(body.n, body.pairs));
    SparseSymMatrix out(pat);
    for (std::size_t k = 0; k < body.pairs.size(); ++k) {
        const auto [a, b] = body.pairs[k];
        const Index e = pat->entry_index(a, b);
        out.values()[e] = body.vals[k];
    }
    return out;
}

void write_matrix_market(const std::string& path, const SparseSymMatrix& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << m.n() << " " << m.n() << " " << m.nnz() << "\n";
    out.precision(17);
    for (Index e = 0; e < m.nnz(); ++e) {
        const auto [i, j] = m.pattern().entry(e);
        out << (i + 1) << " " << (j + 1) << " " << m.value(e) << "\n";
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

SparsityPattern read_pattern(const std::string& path) {
    MmBody body = read_mm_body(path);
    if (!body.pattern) {
        // take the nonzero structure
        std::vector<IndexPair> nz;
        nz.reserve(body.pairs.size());
        for (std::size_t k = 0; k < body.pairs.size(); ++k)
            if (body.vals[k] != 0.0) nz.push_back(body.pairs[k]);
        return SparsityPattern::build(body.n, nz);
    }
    return SparsityPattern::build(body.n, body.pairs);
}

void write_pattern(const std::string& path, const SparsityPattern& p) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "%%MatrixMarket matrix coordinate pattern symmetric\n";
    out << p.n() << " " << p.n() << " " << p.nnz() << "\n";
    for (Index e = 0; e < p.nnz(); ++e) {
        const auto [i, j] = p.entry(e);
        out << (i + 1) << " " << (j + 1) << "\n";
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

namespace {

constexpr char kSampleMagic[4] = {'S', 'M', 'P', 'L'};

SampleMatrix read_samples_binary(std::ifstream& in, const std::string& path, bool center) {
    char magic[4];
    in.read(magic, 4);
    std::uint64_t n = 0, num = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    in.read(reinterpret_cast<char*>(&num), 8);
    if (!in) throw ParseError("truncated sample header in '" + path + "'");
    if (n == 0 || num == 0 || n > (1ull << 32) || num > (1ull << 32))
        throw ParseError("implausible sample dimensions in '" + path + "'");
    std::vector<double> data(n * num);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw ParseError("truncated sample data in '" + path + "'");
    return SampleMatrix(static_cast<Index>(n), static_cast<Index>(num),
                        std::move(data), center);
}

}  // namespace

SampleMatrix read_samples(const std::string& path, bool center) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw Error("cannot open '" + path + "'");
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::memcmp(magic, kSampleMagic, 4) == 0) {
        probe.seekg(0);
        return read_samples_binary(probe, path, center);
    }
    probe.close();

    std::ifstream in(path);
    long line = 1;
    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty sample file", 1);
    std::istringstream hs(header);
    Index n = 0, num = 0;
    if (!(hs >> n >> num) || n <= 0 || num <= 0)
        throw ParseError("bad sample header '" + header + "'", line);
    std::vector<double> data(static_cast<std::size_t>(n) * num);
    for (Index s = 0; s < num; ++s) {
        std::string row;
        if (!std::getline(in, row))
            throw ParseError("expected " + std::to_string(num) + " sample lines", line);
        ++line;
        std::istringstream rs(row);
        for (Index v = 0; v < n; ++v) {
            if (!(rs >> data[s * n + v]))
                throw ParseError("bad sample line (needs " + std::to_string(n) +
                                     " values)", line);
        }
    }
    return SampleMatrix(n, num, std::move(data), center);
}

void write_samples_text(const std::string& path, const SampleMatrix& x) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    out << x.n() << " " << x.samples() << "\n";
    for (Index s = 0; s < x.samples(); ++s) {
        for (Index v = 0; v < x.n(); ++v) {
            if (v) out << " ";
            out << x.at(v, s);
        }
        out << "\n";
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

void write_samples_binary(const std::string& path, const SampleMatrix& x) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(kSampleMagic, 4);
    const std::uint64_t n = x.n(), num = x.samples();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(&num), 8);
    out.write(reinterpret_cast<const char*>(x.raw().data()),
              static_cast<std::streamsize>(x.raw().size() * sizeof(double)));
    if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace mdmc::io
