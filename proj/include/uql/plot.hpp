#pragma once

#include <string>
#include <string_view>

namespace uql {

enum class PlotKind { value_curve, bias_curve, policy_map, value_map };

PlotKind parse_plot_kind(std::string_view name);
std::string_view plot_kind_name(PlotKind kind);

// Renders input_path to a standalone SVG and returns the output path
// (output_path, or <kind>.svg next to the input when empty).
//
// value-curve / bias-curve read the aggregate format (step,metric,mean,std,n)
// and draw one mean line plus a mean±std band per probe_value_* /
// probe_bias_* metric. A file with no data rows yields empty axes; data rows
// without a matching metric are an error naming the expected prefix.
//
// value-map / policy-map read a per-state table with row,col columns and one
// of q_mean|value|q_star and draw the grid colored by the per-cell action
// maximum. Cells get greedy-action arrows (8-action tables), and value-map
// prints the cell value; policy-map requires an action column.
std::string render_plot(const std::string& input_path, PlotKind kind,
                        const std::string& output_path);

}  // namespace uql
