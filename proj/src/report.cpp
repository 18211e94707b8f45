#include "fsdag/errors.hpp"
#include "fsdag/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fsdag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MethodStats {
  std::string method;
  std::vector<const ReportRow*> rows;
};

std::vector<MethodStats> group_by_method(const std::vector<ReportRow>& rows) {
  std::vector<MethodStats> groups;
  for (const ReportRow& r : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const MethodStats& g) { return g.method == r.method; });
    if (it == groups.end()) {
      groups.push_back({r.method, {}});
      it = std::prev(groups.end());
    }
    it->rows.push_back(&r);
  }
  return groups;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Get>
double average(const MethodStats& g, Get get) {
  double total = 0;
  for (const ReportRow* r : g.rows) total += get(*r);
  return total / static_cast<double>(g.rows.size());
}

json summary_to_json(const ReportRow& r) {
  const MetricSummary& s = r.summary;
  return json{{"method", r.method},
              {"seed", r.seed},
              {"converged", r.converged},
              {"mean_error", s.mean_error},
              {"std_error", s.std_error},
              {"failure_rate", s.failure_rate},
              {"landmark_failure_rate", s.landmark_failure_rate},
              {"threshold_px", s.threshold_px},
              {"sample_count", s.sample_count},
              {"population_std", s.population_std},
              {"errors", s.errors}};
}

}  // namespace

std::string format_report_table(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "Method" << std::right << std::setw(6) << "Runs" << std::setw(13) << "Mean error"
     << std::setw(13) << "Std error" << std::setw(14) << "Failure rate" << std::setw(15) << "Median mean" << '\n';
  os << std::string(81, '-') << '\n';
  for (const MethodStats& g : group_by_method(rows)) {
    std::vector<double> means;
    for (const ReportRow* r : g.rows) means.push_back(r->summary.mean_error);
    const bool all_converged = std::all_of(g.rows.begin(), g.rows.end(), [](const ReportRow* r) { return r->converged; });
    os << std::left << std::setw(20) << g.method << std::right << std::setw(6) << g.rows.size() << std::fixed
       << std::setprecision(3) << std::setw(13) << average(g, [](const ReportRow& r) { return r.summary.mean_error; })
       << std::setw(13) << average(g, [](const ReportRow& r) { return r.summary.std_error; }) << std::setw(13)
       << std::setprecision(2) << 100.0 * average(g, [](const ReportRow& r) { return r.summary.failure_rate; }) << '%'
       << std::setprecision(3) << std::setw(15) << median(means) << (all_converged ? "" : "  (not converged)") << '\n';
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

fs::path emit_report(const std::vector<ReportRow>& rows, const fs::path& stem) {
  if (rows.empty()) throw std::invalid_argument("emit_report: no summaries");
  json doc;
  doc["format"] = "fsdag-report";
  doc["version"] = 1;
  json runs = json::array();
  for (const ReportRow& r : rows) runs.push_back(summary_to_json(r));
  doc["runs"] = std::move(runs);
  json methods = json::array();
  for (const MethodStats& g : group_by_method(rows)) {
    std::vector<double> means;
    for (const ReportRow* r : g.rows) means.push_back(r->summary.mean_error);
    methods.push_back({{"method", g.method},
                       {"runs", g.rows.size()},
                       {"mean_error_mean", average(g, [](const ReportRow& r) { return r.summary.mean_error; })},
                       {"mean_error_median", median(means)},
                       {"std_error_mean", average(g, [](const ReportRow& r) { return r.summary.std_error; })},
                       {"failure_rate_mean", average(g, [](const ReportRow& r) { return r.summary.failure_rate; })}});
  }
  doc["methods"] = std::move(methods);

  fs::path json_path = stem;
  json_path += ".json";
  fs::path text_path = stem;
  text_path += ".txt";
  if (stem.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(stem.parent_path(), ec);
  }
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << doc.dump(2) << '\n';
  std::ofstream txt(text_path);
  if (!txt) throw IoError("cannot write " + text_path.string());
  txt << format_report_table(rows);
  if (!js || !txt) throw IoError("failed writing report " + stem.string());
  return json_path;
}

std::vector<ReportRow> read_report(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw FormatError("missing report " + json_path.string());
  try {
    const json doc = json::parse(in);
    if (doc.value("format", "") != "fsdag-report") throw FormatError("not a report: " + json_path.string());
    if (doc.at("version").get<int>() != 1) throw VersionError("unsupported report version");
    std::vector<ReportRow> rows;
    for (const json& r : doc.at("runs")) {
      ReportRow row;
      row.method = r.at("method").get<std::string>();
      row.seed = r.at("seed").get<std::uint64_t>();
      row.converged = r.at("converged").get<bool>();
      MetricSummary& s = row.summary;
      s.mean_error = r.at("mean_error").get<double>();
      s.std_error = r.at("std_error").get<double>();
      s.failure_rate = r.at("failure_rate").get<double>();
      s.landmark_failure_rate = r.at("landmark_failure_rate").get<double>();
      s.threshold_px = r.at("threshold_px").get<double>();
      s.sample_count = r.at("sample_count").get<std::size_t>();
      s.population_std = r.at("population_std").get<bool>();
      s.errors = r.at("errors").get<std::vector<std::vector<double>>>();
      rows.push_back(std::move(row));
    }
    return rows;
  } catch (const json::exception& e) {
    throw FormatError("corrupt report " + json_path.string() + ": " + e.what());
  }
}

void emit_overlay(const Sample& sample, const LandmarkSet& pred, const LandmarkSet& gt, const fs::path& path) {
  if (pred.size() != gt.size()) throw std::invalid_argument("emit_overlay: landmark counts differ");
  const Eigen::Index h = sample.image.rows(), w = sample.image.cols();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const double sx = static_cast<double>(std::max<Eigen::Index>(w - 1, 1));
  const double sy = static_cast<double>(std::max<Eigen::Index>(h - 1, 1));
  auto px = [&](double x) { return x * sx + 0.5; };
  auto py = [&](double y) { return y * sy + 0.5; };
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 8 * w << "\" height=\"" << 8 * h << "\" viewBox=\"0 0 "
      << w << ' ' << h << "\">\n";
  out << "<g id=\"image\" shape-rendering=\"crispEdges\">\n";
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const int v = static_cast<int>(std::lround(std::clamp(sample.image(r, c), 0.0, 1.0) * 255.0));
      out << "<rect x=\"" << c << "\" y=\"" << r << "\" width=\"1\" height=\"1\" fill=\"rgb(" << v << ',' << v << ',' << v
          << ")\"/>\n";
    }
  }
  out << "</g>\n";
  out << std::setprecision(10);
  out << "<g id=\"correspondence\" stroke=\"white\" stroke-width=\"0.3\">\n";
  for (Eigen::Index i = 0; i < gt.size(); ++i) {
    out << "<line x1=\"" << px(gt.x(i)) << "\" y1=\"" << py(gt.y(i)) << "\" x2=\"" << px(pred.x(i)) << "\" y2=\""
        << py(pred.y(i)) << "\"/>\n";
  }
  out << "</g>\n<g id=\"ground_truth\" fill=\"lime\">\n";
  for (Eigen::Index i = 0; i < gt.size(); ++i) {
    out << "<circle cx=\"" << px(gt.x(i)) << "\" cy=\"" << py(gt.y(i)) << "\" r=\"0.9\"/>\n";
  }
  out << "</g>\n<g id=\"prediction\" fill=\"red\">\n";
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    out << "<circle cx=\"" << px(pred.x(i)) << "\" cy=\"" << py(pred.y(i)) << "\" r=\"0.9\"/>\n";
  }
  out << "</g>\n</svg>\n";
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace fsdag
