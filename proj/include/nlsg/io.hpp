#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "nlsg/dynamics.hpp"
#include "nlsg/graph.hpp"
#include "nlsg/operators.hpp"
#include "nlsg/shooting.hpp"
#include "nlsg/stationary.hpp"

namespace nlsg::io {

using json = nlohmann::ordered_json;

std::string format_double(double v); // shortest round-trip-safe decimal

// graph document: {"edges": N, "incoming": K, "alphas": [...], "p": ...}
json graph_to_json(const StarGraph& g);
StarGraph graph_from_json(const json& j, bool validate = true);

// grid document: {"length": L, "points": n}
json grid_to_json(const EdgeGrid& grid);
EdgeGrid grid_from_json(const json& j);

// field CSV: header "edge,x,re,im", one row per sample
void write_field_csv(std::ostream& os, const GraphField& f);
GraphField read_field_csv(std::istream& is);

// state sidecar: {"a":..., "omega":..., "pattern":[...]}
json state_sidecar(const ShiftedState& s);

json report_to_json(const SpectralReport& r);
json stability_to_json(const StabilityReport& r);

// trajectory CSV: t,Q,E,P,deviation,rhs_dPdt at the recording cadence
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// coordinate-format dump (both triangles) of the operator entries
void write_operator_coo(std::ostream& os, const GraphOperator& op);

} // namespace nlsg::io
