#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "difflim/analysis.hpp"
#include "difflim/diffusion.hpp"
#include "difflim/scattering.hpp"
#include "difflim/transport.hpp"

namespace difflim {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

nlohmann::json to_json(const CertReport& report);
nlohmann::json to_json(const IterationLog& log);
nlohmann::json to_json(const NormSet& norms);
nlohmann::json slopes_json(const ConvergenceReport& report);

/// x, a11 ... a33 (row major), min_eigenvalue; one row per cell center.
std::string tensor_csv(const DiffusionTensor& tensor, const Grid1D& grid);
/// x, mu, u at cell centers.
std::string transport_csv(const TransportSolution& solution);
/// x, u_bar at cell centers.
std::string average_csv(const TransportSolution& solution);
/// x, u0, grad_u0, flux at cell centers (u0 interpolated from the nodes).
std::string diffusion_csv(const DiffusionSolution& solution);
/// x, u0 at the nodes.
std::string diffusion_nodes_csv(const DiffusionSolution& solution);
std::string refinement_csv(const std::vector<RefinementRow>& rows);
/// eps, err_total, err_fluct, bdry, deriv, remainder, err_l1, err_l4
std::string report_csv(const ConvergenceReport& report);
/// Per-eps solver diagnostics not in the main report.
std::string study_details_csv(const ConvergenceReport& report);
std::string apriori_csv(const AprioriTable& table);
/// Two columns: log(eps), log(value), for one report quantity.
std::string plot_data(const ConvergenceReport& report, const std::string& quantity);

/// Quantities plot_data accepts, in report-column order.
const std::vector<std::string>& report_quantities();

/// Writes text, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace difflim
