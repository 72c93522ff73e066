#include "mscca/archive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mscca/csv_io.hpp"

namespace mscca {

namespace {

using Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

Json coords_json(const Eigen::MatrixXd& m, Index r) {
  Json row = Json::array();
  for (Index c = 0; c < m.cols(); ++c) row.push_back(round_sig15(m(r, c)));
  return row;
}

Json point(const char* kind, const std::string& label, Json coords, double mass, std::size_t size) {
  Json p;
  p["kind"] = kind;
  p["label"] = label;
  p["coords"] = std::move(coords);
  p["mass"] = round_sig15(mass);
  p["size"] = size;
  return p;
}

void add_categories(Json& points, const CategoricalDataset& data, const Eigen::MatrixXd& coords,
                    const Eigen::VectorXd& masses) {
  const auto names = data.category_names();
  for (std::size_t q = 0; q < names.size(); ++q)
    points.push_back(point("category", names[q], coords_json(coords, idx(q)), masses(idx(q)),
                           static_cast<std::size_t>(data.frequencies()(idx(q)))));
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

double round_sig15(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(coords_json(m, r));
  return out;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(round_sig15(v(i)));
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ShapeError("matrix must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Eigen::MatrixXd m(idx(rows), idx(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ShapeError("matrix rows have different lengths");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ShapeError("matrix entry is not a number");
      m(idx(r), idx(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Json dataset_json(const CategoricalDataset& data, const SupplementaryData& sup) {
  Json d;
  d["n_obs"] = data.n_obs();
  d["variables"] = Json::array();
  for (std::size_t j = 0; j < data.n_vars(); ++j)
    d["variables"].push_back({{"name", data.var_names()[j]}, {"categories", data.labels(j)}});
  d["supplementary"] = Json::array();
  for (std::size_t h = 0; h < sup.n_sup(); ++h) {
    Json classes = Json::array();
    for (std::size_t s = 0; s < sup.n_classes(h); ++s)
      classes.push_back({{"label", sup.labels(h)[s]}, {"size", sup.class_size(h, s)}});
    d["supplementary"].push_back({{"name", sup.var_names()[h]}, {"classes", std::move(classes)}});
  }
  return d;
}

Json solution_json(const MsccaSolution& solution, const CategoricalDataset& data, const SupplementaryData& sup,
                   const BiplotModel& model) {
  const auto& u = solution.assignment;
  const ClusterSpec& spec = u.spec();
  std::vector<std::string> labels(static_cast<std::size_t>(spec.total()));
  for (std::size_t r = 0; r < model.row_source.size(); ++r)
    labels[static_cast<std::size_t>(model.row_source[r])] = model.row_labels[r];
  const auto sizes = u.cluster_sizes();

  Json s;
  s["dims"] = solution.quantifications.cols();
  s["cluster_counts"] = spec.counts();
  s["clusters"] = Json::array();
  for (std::size_t h = 0; h < spec.n_sup(); ++h)
    for (std::size_t c = 0; c < spec.n_classes(h); ++c)
      for (int k = 0; k < spec.count(h, c); ++k) {
        const auto col = static_cast<std::size_t>(spec.block_offset(h) + spec.class_offset(h, c) + k);
        s["clusters"].push_back({{"column", col},
                                 {"sup", sup.var_names()[h]},
                                 {"class", sup.labels(h)[c]},
                                 {"index", k},
                                 {"label", labels[col]},
                                 {"size", sizes[col]}});
      }
  s["assignment"] = Json::array();
  for (std::size_t i = 0; i < u.n_obs(); ++i) {
    Json clusters;
    for (std::size_t h = 0; h < u.n_sup(); ++h) clusters[sup.var_names()[h]] = u.cluster(h, i);
    s["assignment"].push_back({{"obs", i}, {"clusters", std::move(clusters)}});
  }
  s["G"] = matrix_json(solution.centers);
  s["categories"] = data.category_names();
  s["B"] = matrix_json(solution.quantifications);
  s["phi"] = round_sig15(solution.objective);
  s["psi"] = round_sig15(solution.psi);
  Json trace = Json::array();
  for (double t : solution.objective_trace) trace.push_back(round_sig15(t));
  s["trace"] = std::move(trace);
  s["iterations"] = solution.iterations;
  s["converged"] = solution.converged;
  s["start_index"] = solution.start_index;
  return s;
}

HierarchicalAssignment assignment_from_json(const Json& solution, const SupplementaryData& sup) {
  const ClusterSpec spec(solution.at("cluster_counts").get<std::vector<std::vector<int>>>());
  if (spec.n_sup() != sup.n_sup()) throw ShapeError("archive and data disagree on the supplementary variables");
  for (std::size_t h = 0; h < sup.n_sup(); ++h)
    if (spec.n_classes(h) != sup.n_classes(h)) throw ShapeError("archive and data disagree on the classes");
  const Json& records = solution.at("assignment");
  if (records.size() != sup.n_obs()) throw ShapeError("archive and data disagree on N");
  return build_assignment(sup, spec, [&](std::size_t h, std::size_t i) {
    return records[i].at("clusters").at(sup.var_names()[h]).get<int>();
  });
}

Json biplot_json(const BiplotModel& model, const CategoricalDataset& data, PointSet which) {
  Json b;
  b["dims"] = model.col_coords.cols();
  b["gamma"] = round_sig15(model.gamma);
  Json points = Json::array();
  if (which == PointSet::ClustersClassesCategories) {
    for (std::size_t r = 0; r < model.row_labels.size(); ++r) {
      const auto cls = static_cast<std::size_t>(model.row_class[r]);
      Json p = point("cluster", model.row_labels[r], coords_json(model.row_coords, idx(r)), model.row_masses(idx(r)),
                     model.row_sizes[r]);
      p["share"] = round_sig15(static_cast<double>(model.row_sizes[r]) / static_cast<double>(model.class_sizes[cls]));
      points.push_back(std::move(p));
    }
    for (std::size_t c = 0; c < model.class_labels.size(); ++c)
      points.push_back(point("class", model.class_labels[c], coords_json(model.class_coords, idx(c)),
                             model.class_masses(idx(c)), model.class_sizes[c]));
  } else if (which == PointSet::ClassesCategories) {
    for (std::size_t r = 0; r < model.row_labels.size(); ++r)
      points.push_back(point("class", model.row_labels[r], coords_json(model.row_coords, idx(r)),
                             model.row_masses(idx(r)), model.row_sizes[r]));
  }
  add_categories(points, data, model.col_coords, model.col_masses);
  b["points"] = std::move(points);
  return b;
}

Json category_points_json(const CategoricalDataset& data, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd masses = data.frequencies() / static_cast<double>(data.n_obs() * data.n_vars());
  const Eigen::MatrixXd coords = masses.cwiseSqrt().asDiagonal() * b;
  Json out;
  out["dims"] = b.cols();
  out["gamma"] = 1.0;
  Json points = Json::array();
  add_categories(points, data, coords, masses);
  out["points"] = std::move(points);
  return out;
}

std::vector<ResidualRecord> residual_records(const BiplotModel& model, const std::string& method) {
  std::vector<ResidualRecord> out;
  for (Index r = 0; r < model.residuals.rows(); ++r) {
    const std::string& cls = model.class_labels[static_cast<std::size_t>(model.row_class[static_cast<std::size_t>(r)])];
    for (Index c = 0; c < model.residuals.cols(); ++c)
      out.push_back({method, cls, model.row_labels[static_cast<std::size_t>(r)],
                     model.col_labels[static_cast<std::size_t>(c)], model.residuals(r, c)});
  }
  return out;
}

Json residuals_json(const std::vector<ResidualRecord>& records) {
  Json out = Json::array();
  for (const auto& r : records)
    out.push_back({{"method", r.method},
                   {"class", r.class_label},
                   {"row", r.row_label},
                   {"column", r.col_label},
                   {"value", round_sig15(r.value)}});
  return out;
}

std::string coords_csv(const Json& biplot) {
  const auto dims = biplot.at("dims").get<std::size_t>();
  std::vector<std::string> header = {"point_kind", "label"};
  for (std::size_t d = 1; d <= dims; ++d) header.push_back("dim" + std::to_string(d));
  header.push_back("mass");
  header.push_back("size");
  std::string out = io::csv_line(header);
  for (const auto& p : biplot.at("points")) {
    std::vector<std::string> f = {p.at("kind").get<std::string>(), p.at("label").get<std::string>()};
    for (const auto& x : p.at("coords")) f.push_back(io::format_number(x.get<double>()));
    f.push_back(io::format_number(p.at("mass").get<double>()));
    f.push_back(std::to_string(p.at("size").get<std::size_t>()));
    out += io::csv_line(f);
  }
  return out;
}

std::string residuals_csv(const std::vector<ResidualRecord>& records) {
  std::string out = io::csv_line({"method", "class", "row", "column", "value"});
  for (const auto& r : records)
    out += io::csv_line({r.method, r.class_label, r.row_label, r.col_label, io::format_number(round_sig15(r.value))});
  return out;
}

double cluster_font_size(double share) { return 8.0 + 12.0 * std::clamp(share, 0.0, 1.0); }

std::string render_svg(const Json& biplot) {
  const auto dims = biplot.at("dims").get<long>();
  if (dims != 2) throw ExportError("SVG export needs a two-dimensional solution, got p = " + std::to_string(dims));
  const Json& points = biplot.at("points");

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (const auto& p : points) {
    const double x = p.at("coords")[0].get<double>(), y = p.at("coords")[1].get<double>();
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const double span = std::max({xmax - xmin, ymax - ymin, std::numeric_limits<double>::min()});
  const double pad = 0.08 * span;
  xmin -= pad, xmax += pad, ymin -= pad, ymax += pad;

  constexpr double size = 640.0, margin = 40.0;
  const double scale = (size - 2 * margin) / std::max(xmax - xmin, ymax - ymin);
  const auto sx = [&](double x) { return margin + (x - xmin) * scale; };
  const auto sy = [&](double y) { return size - margin - (y - ymin) * scale; };

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\"0 0 640 640\">\n";
  out += "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
  out += "<line class=\"axis\" x1=\"" + fixed(sx(xmin)) + "\" y1=\"" + fixed(sy(0)) + "\" x2=\"" + fixed(sx(xmax)) +
         "\" y2=\"" + fixed(sy(0)) + "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
  out += "<line class=\"axis\" x1=\"" + fixed(sx(0)) + "\" y1=\"" + fixed(sy(ymin)) + "\" x2=\"" + fixed(sx(0)) +
         "\" y2=\"" + fixed(sy(ymax)) + "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
  for (const auto& p : points) {
    const std::string kind = p.at("kind").get<std::string>();
    const double x = sx(p.at("coords")[0].get<double>()), y = sy(p.at("coords")[1].get<double>());
    std::string colour = "#333333", style;
    double font = 10.0;
    if (kind == "cluster") {
      colour = "#c0392b";
      font = cluster_font_size(p.value("share", 0.0));
    } else if (kind == "class") {
      colour = "#2c7fb8";
      font = 11.0;
      style = " font-style=\"italic\"";
    }
    out += "<g class=\"" + kind + "\"><circle cx=\"" + fixed(x) + "\" cy=\"" + fixed(y) + "\" r=\"3\" fill=\"" +
           colour + "\"/><text x=\"" + fixed(x + 5) + "\" y=\"" + fixed(y - 5) + "\" font-size=\"" + fixed(font) +
           "\" font-family=\"sans-serif\" fill=\"" + colour + "\"" + style + ">" +
           xml_escape(p.at("label").get<std::string>()) + "</text></g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace mscca
