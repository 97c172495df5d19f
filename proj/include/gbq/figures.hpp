#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbq/sweep.hpp"

namespace gbq {

struct Artifact {
  std::string file;
  std::string role;  // panel, table, fit, snapshot, result, report
  std::string content;
};

/// Files of one run plus manifest fields beyond the file list.
struct ArtifactBundle {
  std::vector<Artifact> files;
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();

  void add(std::string file, std::string role, std::string content);
};

struct FigureOptions {
  std::vector<double> epsilons;  // empty: the figure's default list
  int points = 101;              // parameter grid points
  double z_factor = 0.5;
  /// QoI grid overrides; unset fields keep the figure defaults.
  std::optional<double> resolution;
  std::optional<double> h_x_eps;
  std::optional<double> h_t_eps;
  std::optional<StencilSource> source;
  int snapshot_points = 481;  // per axis for 2-D field panels
  int workers = 0;
};

std::vector<std::string> figure_ids();

/// fig1..fig5; throws UnknownFigure.
ArtifactBundle reproduce_figure(const std::string& id, const FigureOptions& opt = {});

/// Sweep tables behind fig2 (three columns) and fig4 (three columns), each
/// with sigma = 0, 1, 2. Exposed for tests that check the scaling directly.
std::vector<SweepTable> figure2_tables(const FigureOptions& opt);
std::vector<SweepTable> figure4_tables(const FigureOptions& opt);

/// "1/40" when 1/eps is an integer, else the decimal value.
std::string epsilon_label(double eps);

/// Columns: coordinate, then one column per epsilon of sigma index k.
std::string panel_csv(const SweepTable& t, int k, const std::string& coord);

}  // namespace gbq
