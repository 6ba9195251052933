#pragma once

// Report assembly: an executive summary plus per-component sections with
// posterior and cumulative-fit figures, a model appendix with the search
// trace, and a machine-readable sidecar.  Outputs are deterministic byte
// streams: no timestamps, fixed number formatting, and figure series taken
// verbatim from the posterior decomposition.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "autostat/describe.hpp"
#include "autostat/gp.hpp"
#include "autostat/normal_form.hpp"
#include "autostat/parse.hpp"
#include "autostat/search.hpp"
#include "autostat/svg.hpp"

namespace autostat {

struct ReportMeta {
  std::string language = "FULL";
  std::uint64_t seed = 0;
  int max_depth = 10;
  int restarts = 10;
  bool interpretable = false;
};

struct ComponentStatistics {
  double cv_mae = 0.0;
  double cv_mae_reduction = 0.0;
  double explained_residual_variance = 0.0;  // 1 - Var(r_k)/Var(r_{k-1})
  bool improves_cv = true;
};

// Per ordered component: the CV MAE path from the ordering plus the fraction
// of the remaining training-residual variance the component explains.
inline std::vector<ComponentStatistics> component_statistics(
    const ModelDescription& desc,
    const std::vector<PosteriorComponent>& comps_train, const Dataset& data) {
  const int n = data.n();
  std::vector<double> residual(data.ys);
  for (auto& r : residual) r -= data.y_mean;
  auto variance = [&] {
    double s = 0.0;
    for (double r : residual) s += r * r;
    return s / static_cast<double>(n);
  };

  std::vector<ComponentStatistics> out;
  double var_prev = variance();
  for (size_t pos = 0; pos < desc.components.size(); ++pos) {
    const auto& cd = desc.components[pos];
    const auto& comp = comps_train[static_cast<size_t>(cd.term_index)];
    for (int i = 0; i < n; ++i) residual[static_cast<size_t>(i)] -= comp.mean[static_cast<size_t>(i)];
    double var_now = variance();
    ComponentStatistics st;
    st.cv_mae = cd.cv_mae;
    st.cv_mae_reduction = cd.cv_mae_reduction;
    st.improves_cv = cd.improves_cv;
    st.explained_residual_variance =
        var_prev > 0.0 ? 1.0 - var_now / var_prev : 0.0;
    out.push_back(st);
    var_prev = var_now;
  }
  return out;
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string axis_label(const std::string& base,
                              const std::string& unit) {
  return unit.empty() ? base : base + " (" + unit + ")";
}

// Posterior of the sum of a subset of components (for cumulative-fit bands).
inline Posterior subset_posterior(const NormalForm& nf,
                                  const std::vector<int>& subset,
                                  const Dataset& data,
                                  const std::vector<double>& grid) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(data.n(), data.n());
  for (const auto& t : nf.terms) gram += term_matrix(t, data.xs, data.xs);
  FactoredGram g = factor_with_jitter(gram);
  Eigen::VectorXd alpha = g.llt.solve(data.standardized_y());

  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd ks = Eigen::MatrixXd::Zero(m, data.n());
  std::vector<double> kss(grid.size(), 0.0);
  for (int ti : subset) {
    const ProductTerm& t = nf.terms[static_cast<size_t>(ti)];
    ks += term_matrix(t, grid, data.xs);
    for (size_t j = 0; j < grid.size(); ++j)
      kss[j] += eval_term(t, grid[j], grid[j]);
  }
  Eigen::VectorXd mean_std = ks * alpha;
  Eigen::MatrixXd kinv_ks = g.llt.solve(ks.transpose());

  Posterior p;
  p.mean.resize(grid.size());
  p.variance.resize(grid.size());
  for (size_t j = 0; j < grid.size(); ++j) {
    auto idx = static_cast<Eigen::Index>(j);
    double var_std =
        checked_variance(kss[j] - ks.row(idx).dot(kinv_ks.col(idx)));
    p.mean[j] = data.y_mean + data.y_std * mean_std[idx];
    p.variance[j] = data.y_std * data.y_std * var_std;
  }
  return p;
}

}  // namespace detail

// Renders report.md, figures/*.svg and model.json into out_dir.
inline void render_report(const ScoredModel& model, const Dataset& data,
                          const std::vector<SearchStep>& trace,
                          const ReportMeta& meta,
                          const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "figures");

  // Dense grid over the data range plus a 10% extrapolation margin.
  const int grid_n = 300;
  std::vector<double> grid(grid_n);
  double lo = data.x_min(), hi = data.x_max() + 0.1 * data.x_range();
  if (!(hi > lo)) hi = lo + 1.0;
  for (int i = 0; i < grid_n; ++i)
    grid[static_cast<size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / (grid_n - 1);

  NormalForm nf = to_normal_form(model.kernel);
  Posterior full = predict(model.kernel, data, grid);
  std::vector<PosteriorComponent> comps_grid =
      decompose_posterior(model.kernel, data, grid);
  std::vector<PosteriorComponent> comps_train =
      decompose_posterior(model.kernel, data, data.xs);
  ModelDescription desc = describe_model(nf, data, comps_train);
  std::vector<ComponentStatistics> stats =
      component_statistics(desc, comps_train, data);

  const std::string x_axis = detail::axis_label("x", data.x_unit);
  const std::string y_axis = detail::axis_label("y", data.y_unit);

  // Training-point fit implied by the decomposition (mean + component sum).
  std::vector<double> train_fit(data.ys.size(), data.y_mean);
  for (const auto& c : comps_train)
    for (size_t i = 0; i < train_fit.size(); ++i) train_fit[i] += c.mean[i];

  {  // raw data
    SvgPlot plot("Raw data", x_axis, y_axis);
    plot.add_scatter(data.xs, data.ys);
    detail::write_file(out_dir / "figures" / "raw_data.svg", plot.render());
  }
  {  // full fit with +-2 SD band
    SvgPlot plot("Full model fit", x_axis, y_axis);
    std::vector<double> lo_band(grid.size()), hi_band(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      double sd = std::sqrt(full.variance[i]);
      lo_band[i] = full.mean[i] - 2.0 * sd;
      hi_band[i] = full.mean[i] + 2.0 * sd;
    }
    plot.add_band(grid, lo_band, hi_band);
    plot.add_line(grid, full.mean);
    plot.add_scatter(data.xs, data.ys);
    detail::write_file(out_dir / "figures" / "fit.svg", plot.render());
  }
  {  // residuals after the full fit
    SvgPlot plot("Residuals", x_axis, y_axis);
    std::vector<double> res(data.ys);
    for (size_t i = 0; i < res.size(); ++i) res[i] -= train_fit[i];
    plot.add_scatter(data.xs, res);
    detail::write_file(out_dir / "figures" / "residuals.svg", plot.render());
  }

  // Per-component figures, in presentation order.
  std::vector<int> included;
  for (size_t pos = 0; pos < desc.components.size(); ++pos) {
    const auto& cd = desc.components[pos];
    const auto& comp = comps_grid[static_cast<size_t>(cd.term_index)];
    std::string num = std::to_string(pos + 1);
    {
      SvgPlot plot("Component " + num, x_axis, y_axis);
      if (comp.is_noise) {
        // What remains of the data once every other component is removed.
        std::vector<double> res(data.ys);
        for (size_t i = 0; i < res.size(); ++i) {
          res[i] -= data.y_mean;
          for (const auto& other : comps_train)
            if (&other != &comps_train[static_cast<size_t>(cd.term_index)])
              res[i] -= other.mean[i];
        }
        plot.add_scatter(data.xs, res);
      } else {
        std::vector<double> lo_band(grid.size()), hi_band(grid.size());
        for (size_t i = 0; i < grid.size(); ++i) {
          double sd = std::sqrt(comp.variance[i]);
          lo_band[i] = comp.mean[i] - 2.0 * sd;
          hi_band[i] = comp.mean[i] + 2.0 * sd;
        }
        plot.add_band(grid, lo_band, hi_band);
        plot.add_line(grid, comp.mean);
      }
      detail::write_file(out_dir / "figures" / ("component_" + num + ".svg"),
                         plot.render());
    }
    {
      included.push_back(cd.term_index);
      Posterior cum = detail::subset_posterior(nf, included, data, grid);
      SvgPlot plot("Cumulative fit (" + num +
                       (pos == 0 ? " component)" : " components)"),
                   x_axis, y_axis);
      std::vector<double> lo_band(grid.size()), hi_band(grid.size());
      for (size_t i = 0; i < grid.size(); ++i) {
        double sd = std::sqrt(cum.variance[i]);
        lo_band[i] = cum.mean[i] - 2.0 * sd;
        hi_band[i] = cum.mean[i] + 2.0 * sd;
      }
      plot.add_band(grid, lo_band, hi_band);
      plot.add_line(grid, cum.mean);
      plot.add_scatter(data.xs, data.ys);
      detail::write_file(out_dir / "figures" / ("cumulative_" + num + ".svg"),
                         plot.render());
    }
  }

  // ---- report.md ----
  std::string md;
  std::string title = data.name.empty() ? "dataset" : data.name;
  md += "# Automatic statistical report: " + title + "\n\n";
  md += "## Data summary\n\n";
  md += "- Observations: " + std::to_string(data.n()) + "\n";
  md += "- Input range: [" + detail::fmt_num(data.x_min()) + ", " +
        detail::fmt_num(data.x_max()) + "]" +
        (data.x_unit.empty() ? "" : " " + data.x_unit) + "\n";
  md += "- Output mean " + detail::fmt_num(data.y_mean) + ", standard deviation " +
        detail::fmt_num(data.y_std) +
        (data.y_unit.empty() ? "" : " " + data.y_unit) + "\n\n";

  md += "## Executive summary\n\n";
  md += "The structure search has identified " +
        std::to_string(desc.components.size()) +
        (desc.components.size() == 1 ? " additive component"
                                     : " additive components") +
        " in the data.\n\n";
  for (size_t pos = 0; pos < desc.components.size(); ++pos) {
    const auto& cd = desc.components[pos];
    md += std::to_string(pos + 1) + ". " + detail::capitalize(cd.summary) +
          ".";
    if (!cd.improves_cv)
      md += " (This component does not improve cross-validated error.)";
    md += "\n";
  }
  md += "\n## Components\n";
  for (size_t pos = 0; pos < desc.components.size(); ++pos) {
    const auto& cd = desc.components[pos];
    const auto& st = stats[pos];
    std::string num = std::to_string(pos + 1);
    md += "\n### Component " + num + "\n\n";
    md += cd.full_text + "\n\n";
    if (!cd.improves_cv)
      md += "This component does not improve cross-validated error.\n\n";
    md += "- Kernel term: `" +
          print_term(nf.terms[static_cast<size_t>(cd.term_index)]) + "`\n";
    md += "- Cross-validated MAE after inclusion: " +
          detail::fmt_num(st.cv_mae) +
          (data.y_unit.empty() ? "" : " " + data.y_unit) + "\n";
    md += "- MAE reduction vs previous model: " +
          detail::fmt_num(st.cv_mae_reduction) + "\n";
    md += "- Fraction of residual variance explained: " +
          detail::fmt_num(st.explained_residual_variance) + "\n\n";
    md += "![Component " + num + "](figures/component_" + num + ".svg)\n\n";
    md += "![Cumulative fit " + num + "](figures/cumulative_" + num +
          ".svg)\n";
  }

  md += "\n## Full model\n\n";
  md += "- Kernel: `" + print_kernel(model.kernel) + "`\n";
  md += "- Log marginal likelihood: " + detail::fmt_num(model.log_ml) + "\n";
  md += "- BIC: " + detail::fmt_num(model.bic_value) + "\n";
  md += "- Free parameters: " + std::to_string(model.param_count) + "\n";
  md += "- Search: language " + meta.language + ", depth " +
        std::to_string(meta.max_depth) + ", restarts " +
        std::to_string(meta.restarts) + ", seed " +
        std::to_string(meta.seed) +
        (meta.interpretable ? ", interpretability mode" : "") + "\n\n";
  md += "![Raw data](figures/raw_data.svg)\n\n";
  md += "![Full model fit](figures/fit.svg)\n\n";
  md += "![Residuals](figures/residuals.svg)\n";

  md += "\n## Search trace\n\n";
  md += "| Depth | Kernel | Log ML | BIC | Candidates |\n";
  md += "|---|---|---|---|---|\n";
  for (const auto& step : trace)
    md += "| " + std::to_string(step.depth) + " | `" + step.chosen + "` | " +
          detail::fmt_num(step.log_ml) + " | " +
          detail::fmt_num(step.bic_value) + " | " +
          std::to_string(step.candidates_scored) + " |\n";
  detail::write_file(out_dir / "report.md", md);

  // ---- model.json ----
  nlohmann::ordered_json j;
  j["dataset"] = {{"name", data.name},
                  {"n", data.n()},
                  {"x_unit", data.x_unit},
                  {"y_unit", data.y_unit}};
  j["config"] = {{"language", meta.language},
                 {"seed", meta.seed},
                 {"max_depth", meta.max_depth},
                 {"restarts", meta.restarts},
                 {"interpretable", meta.interpretable}};
  j["model"] = {{"kernel", print_kernel(model.kernel)},
                {"log_marginal_likelihood", model.log_ml},
                {"bic", model.bic_value},
                {"param_count", model.param_count},
                {"restarts_used", model.restarts_used}};
  j["components"] = nlohmann::ordered_json::array();
  for (size_t pos = 0; pos < desc.components.size(); ++pos) {
    const auto& cd = desc.components[pos];
    const auto& st = stats[pos];
    j["components"].push_back(
        {{"position", pos + 1},
         {"term_index", cd.term_index},
         {"kernel", print_term(nf.terms[static_cast<size_t>(cd.term_index)])},
         {"summary", cd.summary},
         {"head_noun", head_noun_name(cd.head_noun_kind)},
         {"is_noise",
          comps_train[static_cast<size_t>(cd.term_index)].is_noise},
         {"cv_mae", st.cv_mae},
         {"cv_mae_reduction", st.cv_mae_reduction},
         {"improves_cv", st.improves_cv},
         {"explained_residual_variance", st.explained_residual_variance}});
  }
  j["search_trace"] = nlohmann::ordered_json::array();
  for (const auto& step : trace)
    j["search_trace"].push_back({{"depth", step.depth},
                                 {"kernel", step.chosen},
                                 {"log_ml", step.log_ml},
                                 {"bic", step.bic_value},
                                 {"candidates", step.candidates_scored}});
  detail::write_file(out_dir / "model.json", j.dump(2) + "\n");
}

}  // namespace autostat
