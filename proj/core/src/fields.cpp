// fields.cpp

#include "ferrosim/fields.hpp"

#include "ferrosim/error.hpp"
#include "ferrosim/numfmt.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>

namespace ferrosim {

Grid::Grid(int n) : n_(n) {
    if (n < 8) {
        throw InvalidInput("grid needs at least 8 cells per side, got " + std::to_string(n));
    }
}

std::vector<std::pair<int, int>> Grid::boundary_loop() const {
    std::vector<std::pair<int, int>> loop;
    loop.reserve(static_cast<std::size_t>(4 * n_));
    for (int i = 0; i < n_; ++i) loop.emplace_back(i, 0);
    for (int j = 0; j < n_; ++j) loop.emplace_back(n_, j);
    for (int i = n_; i > 0; --i) loop.emplace_back(i, n_);
    for (int j = n_; j > 0; --j) loop.emplace_back(0, j);
    return loop;
}

FieldState::FieldState(Grid g)
    : grid(g), q11(g.nodes(), 0.0), q12(g.nodes(), 0.0), m1(g.nodes(), 0.0), m2(g.nodes(), 0.0) {}

void FieldState::set(std::size_t node, QValue q, MValue m) {
    q11[node] = q.q11;
    q12[node] = q.q12;
    m1[node] = m.m1;
    m2[node] = m.m2;
}

double datum_angle(double x, double y) {
    const double dx = x - 0.5;
    const double dy = y - 0.5;
    const double base = (dx == 0.0 && dy == 0.0) ? 0.0 : std::atan2(dy, dx);
    return base - 0.5 * std::numbers::pi;
}

std::pair<QValue, MValue> degree_k_datum(double x, double y, int k, const ModelParams& params) {
    const double t = datum_angle(x, y);
    const double lambda_star = std::sqrt(std::numbers::sqrt2 * params.beta + 1.0);
    const double kt = static_cast<double>(k) * t;
    const double half_sqrt2 = 0.5 * std::numbers::sqrt2;
    QValue q{half_sqrt2 * std::cos(2.0 * kt), half_sqrt2 * std::sin(2.0 * kt)};
    MValue m{lambda_star * std::cos(kt), lambda_star * std::sin(kt)};
    return {q, m};
}

BoundaryData boundary_data(const Grid& grid, int k, const ModelParams& params) {
    if (k < 1) {
        throw InvalidInput("boundary degree k must be >= 1");
    }
    BoundaryData bd;
    for (const auto& [i, j] : grid.boundary_loop()) {
        const auto [q, m] = degree_k_datum(grid.x(i), grid.y(j), k, params);
        bd.nodes.push_back(grid.index(i, j));
        bd.q11.push_back(q.q11);
        bd.q12.push_back(q.q12);
        bd.m1.push_back(m.m1);
        bd.m2.push_back(m.m2);
    }
    return bd;
}

FieldState initial_condition(const Grid& grid, int k, const ModelParams& params) {
    if (k < 1) {
        throw InvalidInput("boundary degree k must be >= 1");
    }
    FieldState s(grid);
    for (int j = 0; j < grid.side(); ++j) {
        for (int i = 0; i < grid.side(); ++i) {
            auto [q, m] = degree_k_datum(grid.x(i), grid.y(j), k, params);
            // The datum is singular at the centre (a node for even n); M takes
            // its vortex-core value there so the symmetry of the datum is kept.
            if (2 * i == grid.n() && 2 * j == grid.n()) m = MValue{};
            s.set(grid.index(i, j), q, m);
        }
    }
    s.time = 0.0;
    return s;
}

void apply_boundary(FieldState& state, const BoundaryData& bd) {
    for (std::size_t b = 0; b < bd.nodes.size(); ++b) {
        const std::size_t node = bd.nodes[b];
        state.q11[node] = bd.q11[b];
        state.q12[node] = bd.q12[b];
        state.m1[node] = bd.m1[b];
        state.m2[node] = bd.m2[b];
    }
}

void write_field_csv(std::ostream& os, const FieldState& s, const ModelParams& params) {
    const Grid& g = s.grid;
    os << "# n=" << g.n() << " h=" << format_double(g.h()) << " time=" << format_double(s.time)
       << " beta=" << format_double(params.beta) << " eps=" << format_double(params.eps) << '\n';
    for (int j = 0; j < g.side(); ++j) {
        for (int i = 0; i < g.side(); ++i) {
            const std::size_t p = g.index(i, j);
            os << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ','
               << format_double(s.q11[p]) << ',' << format_double(s.q12[p]) << ','
               << format_double(s.m1[p]) << ',' << format_double(s.m2[p]) << '\n';
        }
    }
    if (!os) {
        throw IoError("failed writing field CSV");
    }
}

namespace {

FieldFileHeader parse_header(const std::string& line, int line_no) {
    if (line.empty() || line[0] != '#') {
        throw ParseError("field CSV must start with a '# n=... h=... time=... beta=... eps=...' header",
                         line_no, 1);
    }
    FieldFileHeader hdr;
    bool seen_n = false, seen_h = false, seen_t = false, seen_b = false, seen_e = false;
    std::size_t pos = 1;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
        if (pos >= line.size()) break;
        const std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
        const std::string_view token(line.data() + start, pos - start);
        const auto eq = token.find('=');
        const int col = static_cast<int>(start) + 1;
        if (eq == std::string_view::npos) {
            throw ParseError("header token without '='", line_no, col);
        }
        const std::string_view key = token.substr(0, eq);
        const std::string_view val = token.substr(eq + 1);
        const int vcol = col + static_cast<int>(eq) + 1;
        if (key == "n") {
            long long n = 0;
            if (!parse_int(val, n)) throw ParseError("bad integer for n", line_no, vcol);
            hdr.n = static_cast<int>(n);
            seen_n = true;
        } else {
            double v = 0.0;
            if (!parse_double(val, v)) throw ParseError("bad number for " + std::string(key), line_no, vcol);
            if (key == "h") { hdr.h = v; seen_h = true; }
            else if (key == "time") { hdr.time = v; seen_t = true; }
            else if (key == "beta") { hdr.beta = v; seen_b = true; }
            else if (key == "eps") { hdr.eps = v; seen_e = true; }
            else throw ParseError("unknown header key '" + std::string(key) + "'", line_no, col);
        }
    }
    if (!(seen_n && seen_h && seen_t && seen_b && seen_e)) {
        throw ParseError("header must define n, h, time, beta and eps", line_no, 1);
    }
    return hdr;
}

} // namespace

FieldState read_field_csv(std::istream& is, FieldFileHeader* header) {
    std::string line;
    int line_no = 1;
    if (!std::getline(is, line)) {
        throw ParseError("empty field file", 1, 1);
    }
    const FieldFileHeader hdr = parse_header(line, line_no);
    if (hdr.n < 8) {
        throw ParseError("n must be >= 8", line_no, 1);
    }
    const Grid grid(hdr.n);
    if (std::abs(hdr.h * hdr.n - 1.0) > 1e-12) {
        throw ParseError("h inconsistent with n", line_no, 1);
    }

    FieldState s(grid);
    s.time = hdr.time;
    std::size_t node = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (node >= grid.nodes()) {
            throw ParseError("more rows than (n+1)^2 nodes", line_no, 1);
        }
        double vals[6];
        std::size_t pos = 0;
        for (int c = 0; c < 6; ++c) {
            const std::size_t comma = line.find(',', pos);
            const bool last = (c == 5);
            if (!last && comma == std::string::npos) {
                throw ParseError("expected 6 comma-separated values", line_no, static_cast<int>(line.size()) + 1);
            }
            const std::size_t end = last ? line.size() : comma;
            if (last && comma != std::string::npos) {
                throw ParseError("too many columns", line_no, static_cast<int>(comma) + 1);
            }
            if (!parse_double(std::string_view(line).substr(pos, end - pos), vals[c])) {
                throw ParseError("not a number", line_no, static_cast<int>(pos) + 1);
            }
            pos = end + 1;
        }
        const int i = static_cast<int>(node % static_cast<std::size_t>(grid.side()));
        const int j = static_cast<int>(node / static_cast<std::size_t>(grid.side()));
        if (std::abs(vals[0] - grid.x(i)) > 1e-9 || std::abs(vals[1] - grid.y(j)) > 1e-9) {
            throw ParseError("node coordinates out of row-major order", line_no, 1);
        }
        s.q11[node] = vals[2];
        s.q12[node] = vals[3];
        s.m1[node] = vals[4];
        s.m2[node] = vals[5];
        ++node;
    }
    if (node != grid.nodes()) {
        throw ParseError("expected " + std::to_string(grid.nodes()) + " rows, got " + std::to_string(node),
                         line_no, 1);
    }
    if (header) *header = hdr;
    return s;
}

} // namespace ferrosim
