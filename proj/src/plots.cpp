#include "svrt/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "svrt/common.hpp"
#include "svrt/tasks.hpp"

namespace svrt::plots {

namespace {

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string num(double v) { return fmt("%.2f", v); }

std::string header(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke = "black") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"" + stroke + "\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
}

const char* cluster_color(tasks::Cluster c) {
  switch (c) {
    case tasks::Cluster::SD1: return "#1f77b4";
    case tasks::Cluster::SD2: return "#2ca02c";
    case tasks::Cluster::SR1: return "#d62728";
    case tasks::Cluster::SR2: return "#ff7f0e";
  }
  return "black";
}

}  // namespace

std::string dendrogram_svg(const taxonomy::Dendrogram& d, std::span<const std::string> labels) {
  const int n = static_cast<int>(d.leaf_order.size());
  if (n < 2 || static_cast<int>(d.merges.size()) != n - 1) throw DataError("dendrogram_svg: malformed dendrogram");
  if (static_cast<int>(labels.size()) != n) throw DataError("dendrogram_svg: label count does not match leaves");
  const int w = 40 + 28 * n, h = 360;
  const double top = 20, base = h - 50;
  double max_h = 0.0;
  for (const auto& m : d.merges) max_h = std::max(max_h, m.distance);
  if (max_h <= 0.0) max_h = 1.0;
  auto y_of = [&](double height) { return base - (base - top) * height / max_h; };

  std::vector<double> x(2 * n - 1), y(2 * n - 1, base);
  for (int i = 0; i < n; ++i) x[d.leaf_order[i]] = 40 + 28 * i;
  std::string svg = header(w, h);
  for (int i = 0; i < n; ++i) svg += text(40 + 28 * i, base + 16, labels[d.leaf_order[i]]);
  for (int k = 0; k < n - 1; ++k) {
    const auto& m = d.merges[k];
    const double yk = y_of(m.distance);
    svg += line(x[m.a], y[m.a], x[m.a], yk) + line(x[m.b], y[m.b], x[m.b], yk) + line(x[m.a], yk, x[m.b], yk);
    x[n + k] = 0.5 * (x[m.a] + x[m.b]);
    y[n + k] = yk;
  }
  svg += line(20, top, 20, base) + text(16, top + 4, num(max_h), "end") + text(16, base + 4, "0", "end");
  return svg + "</svg>\n";
}

std::string pca_scatter_svg(const Eigen::MatrixXd& projections, std::span<const int> task_ids,
                            const Eigen::VectorXd& explained_ratio) {
  if (projections.cols() < 2) throw DataError("pca_scatter_svg needs two components");
  if (projections.rows() != static_cast<Eigen::Index>(task_ids.size()))
    throw DataError("pca_scatter_svg: task labels do not match rows");
  const int w = 480, h = 480, pad = 50;
  const double x0 = projections.col(0).minCoeff(), x1 = projections.col(0).maxCoeff();
  const double y0 = projections.col(1).minCoeff(), y1 = projections.col(1).maxCoeff();
  auto sx = [&](double v) { return pad + (w - 2 * pad) * (x1 > x0 ? (v - x0) / (x1 - x0) : 0.5); };
  auto sy = [&](double v) { return h - pad - (h - 2 * pad) * (y1 > y0 ? (v - y0) / (y1 - y0) : 0.5); };
  std::string svg = header(w, h);
  svg += line(pad, h - pad, w - pad, h - pad) + line(pad, pad, pad, h - pad);
  svg += text(w / 2.0, h - 15, "PC1 (" + fmt("%.1f", 100.0 * explained_ratio[0]) + "%)");
  svg += "<text x=\"15\" y=\"" + num(h / 2.0) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " + num(h / 2.0) +
         ")\">PC2 (" + fmt("%.1f", 100.0 * explained_ratio[1]) + "%)</text>\n";
  for (Eigen::Index i = 0; i < projections.rows(); ++i) {
    const char* color = cluster_color(tasks::task_spec(task_ids[i]).cluster);
    const double px = sx(projections(i, 0)), py = sy(projections(i, 1));
    svg += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"5\" fill=\"" + color + "\"/>\n";
    svg += text(px + 8, py - 6, std::to_string(task_ids[i]), "start");
  }
  int ly = 20;
  for (auto c : {tasks::Cluster::SD1, tasks::Cluster::SD2, tasks::Cluster::SR1, tasks::Cluster::SR2}) {
    svg += "<circle cx=\"" + num(w - 80.0) + "\" cy=\"" + num(ly) + "\" r=\"5\" fill=\"" + cluster_color(c) + "\"/>\n";
    svg += text(w - 70.0, ly + 4, std::string(tasks::cluster_name(c)), "start");
    ly += 16;
  }
  return svg + "</svg>\n";
}

std::string slope_bars_svg(const taxonomy::SlopeVector& s) {
  const int n = static_cast<int>(s.slopes.size());
  if (n == 0) throw DataError("slope_bars_svg: empty slope vector");
  const int w = 60 + 24 * n, h = 320, pad = 40;
  const double lo = std::min(0.0, s.slopes.minCoeff()), hi = std::max(0.0, s.slopes.maxCoeff());
  const double span = hi > lo ? hi - lo : 1.0;
  auto sy = [&](double v) { return pad + (h - 2 * pad) * (hi - v) / span; };
  std::string svg = header(w, h);
  svg += text(w / 2.0, 16, s.tag + " slope");
  svg += line(40, sy(0.0), w - 10, sy(0.0));
  for (int i = 0; i < n; ++i) {
    const double v = s.slopes[i];
    const double x = 48 + 24 * i;
    const double top = std::min(sy(v), sy(0.0)), height = std::abs(sy(v) - sy(0.0));
    const char* color = cluster_color(tasks::task_spec(s.tasks[i]).cluster);
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"16\" height=\"" + num(height) + "\" fill=\"" +
           color + "\"/>\n";
    svg += text(x + 8, h - pad + 16, std::to_string(s.tasks[i]));
  }
  svg += text(36, sy(hi) + 4, fmt("%.3g", hi), "end") + text(36, sy(lo) + 4, fmt("%.3g", lo), "end");
  return svg + "</svg>\n";
}

}  // namespace svrt::plots
