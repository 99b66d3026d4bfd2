#include "nlsg/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace nlsg::io {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json graph_to_json(const StarGraph& g) {
    return json{{"edges", g.n_edges},
                {"incoming", g.n_incoming},
                {"alphas", g.alphas},
                {"p", g.power}};
}

StarGraph graph_from_json(const json& j, bool validate) {
    try {
        const int n = j.at("edges").get<int>();
        const int k = j.at("incoming").get<int>();
        auto alphas = j.at("alphas").get<std::vector<double>>();
        const double p = j.at("p").get<double>();
        if (validate) return validate_graph(n, k, std::move(alphas), p);
        return StarGraph::make_unchecked(n, k, std::move(alphas), p);
    } catch (const json::exception& e) {
        throw error(std::string("graph document: ") + e.what());
    }
}

json grid_to_json(const EdgeGrid& grid) {
    return json{{"length", grid.length}, {"points", grid.n_points}};
}

EdgeGrid grid_from_json(const json& j) {
    try {
        EdgeGrid g{j.at("length").get<double>(), j.at("points").get<int>()};
        if (!(g.length > 0.0) || g.n_points < 8)
            throw error("grid document: need positive length and >= 8 points");
        return g;
    } catch (const json::exception& e) {
        throw error(std::string("grid document: ") + e.what());
    }
}

void write_field_csv(std::ostream& os, const GraphField& f) {
    os << "edge,x,re,im\n";
    for (int j = 0; j < f.n_edges(); ++j)
        for (int i = 0; i < f.grid.n_points; ++i) {
            const cplx z = f.edges[j][i];
            os << j + 1 << ',' << format_double(f.grid.x(i)) << ','
               << format_double(z.real()) << ',' << format_double(z.imag())
               << '\n';
        }
}

GraphField read_field_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("edge,", 0) != 0)
        throw error("field CSV: missing header");
    std::map<int, std::vector<std::pair<double, cplx>>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int edge;
        double x, re, im;
        char c;
        if (!(ls >> edge >> c >> x >> c >> re >> c >> im))
            throw error("field CSV: malformed row: " + line);
        rows[edge].emplace_back(x, cplx(re, im));
    }
    if (rows.empty()) throw error("field CSV: no samples");
    const std::size_t n = rows.begin()->second.size();
    for (const auto& [edge, samples] : rows)
        if (samples.size() != n || samples.front().first != 0.0)
            throw error("field CSV: edges must share one grid from x = 0");
    EdgeGrid grid{rows.begin()->second.back().first, static_cast<int>(n)};
    GraphField f = GraphField::zeros(static_cast<int>(rows.size()), grid);
    int j = 0;
    for (const auto& [edge, samples] : rows) {
        (void)edge;
        for (std::size_t i = 0; i < n; ++i) f.edges[j][i] = samples[i].second;
        ++j;
    }
    return f;
}

json state_sidecar(const ShiftedState& s) {
    std::vector<int> pattern(s.pattern.m.begin(), s.pattern.m.end());
    return json{{"a", s.shift}, {"omega", s.omega}, {"pattern", pattern}};
}

json report_to_json(const SpectralReport& r) {
    json entries = json::array();
    for (const SpectralEntry& e : r.entries)
        entries.push_back(json{{"lambda", e.lambda},
                               {"mult", e.multiplicity},
                               {"case", match_case_name(e.tag)}});
    return json{{"entries", entries},
                {"morse_index", r.morse_index},
                {"zero_multiplicity", r.zero_multiplicity}};
}

json stability_to_json(const StabilityReport& r) {
    json re = json::array();
    for (const auto& [lam, mult] : r.real_positive)
        re.push_back(json{{"lambda", lam}, {"mult", mult}});
    return json{{"real_positive", re},
                {"max_growth_rate", r.max_growth_rate},
                {"purely_imaginary_count", r.purely_imaginary_count}};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,Q,E,P,deviation,rhs_dPdt\n";
    std::size_t d = 0;
    for (const auto& [t, dev] : traj.group_deviation) {
        // group deviation records align with every record_stride-th step
        while (d < traj.steps.size() && traj.steps[d].t < t - 1e-12) ++d;
        if (d >= traj.steps.size()) break;
        const StepRecord& r = traj.steps[d];
        os << format_double(r.t) << ',' << format_double(r.mass_q) << ','
           << format_double(r.energy_e) << ',' << format_double(r.momentum_p)
           << ',' << format_double(dev) << ','
           << format_double(r.vertex_flux) << '\n';
    }
}

void write_operator_coo(std::ostream& os, const GraphOperator& op) {
    const int n = op.graph.n_edges, m = op.per_edge;
    const std::size_t nnz =
        1 + 4 * static_cast<std::size_t>(n) +
        static_cast<std::size_t>(n) * (m + 2 * (m - 1));
    os << "# symmetric operator, " << op.dimension() << " x "
       << op.dimension() << ", " << nnz << " entries\n";
    auto emit = [&os](int r, int c, double v) {
        os << r << ' ' << c << ' ' << format_double(v) << '\n';
    };
    emit(0, 0, op.vertex_diag);
    for (int j = 0; j < n; ++j) {
        const int base = 1 + j * m;
        emit(0, base, op.coupling[j]);
        emit(base, 0, op.coupling[j]);
        for (int i = 0; i < m; ++i) {
            emit(base + i, base + i, op.diag[j][i]);
            if (i + 1 < m) {
                emit(base + i, base + i + 1, op.offdiag);
                emit(base + i + 1, base + i, op.offdiag);
            }
        }
    }
}

} // namespace nlsg::io
