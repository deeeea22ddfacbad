#include "fedsim/experiment/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::exp {

using nlohmann::json;

Stat summarize(const std::vector<double>& values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

std::string config_value(const Record& record, const std::string& dotted_key) {
  const json* node = &record.config;
  std::size_t start = 0;
  while (start <= dotted_key.size()) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot - start);
    if (!node->is_object() || !node->contains(part)) return "";
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_string()) return node->get<std::string>();
  return node->dump();
}

namespace {

bool maximized(const std::string& metric) { return metric.find("accuracy") != std::string::npos; }

std::string format_number(double v) { return fmt::format("{:.10g}", v); }

}  // namespace

Analysis analyze(const std::vector<Record>& records, const std::vector<std::string>& group_by) {
  if (records.empty()) throw EmptyInputError("no records to analyze");
  Analysis a;
  a.group_by = group_by;

  std::set<std::string> metric_set;
  for (const auto& r : records) {
    for (const auto& e : r.entries) {
      for (const auto& [k, v] : e.metrics) metric_set.insert(k);
    }
  }
  a.metrics.assign(metric_set.begin(), metric_set.end());

  std::vector<std::vector<const Record*>> members;
  for (const auto& r : records) {
    std::vector<std::string> values;
    std::string label;
    for (const auto& key : group_by) {
      values.push_back(config_value(r, key));
      label += (label.empty() ? "" : ",") + key + "=" + values.back();
    }
    if (label.empty()) label = "all";
    auto it = std::find_if(a.groups.begin(), a.groups.end(),
                           [&](const GroupSummary& g) { return g.label == label; });
    if (it == a.groups.end()) {
      a.groups.push_back(GroupSummary{label, values, 0, {}, {}, {}});
      members.emplace_back();
      it = a.groups.end() - 1;
    }
    members[static_cast<std::size_t>(it - a.groups.begin())].push_back(&r);
  }

  for (std::size_t g = 0; g < a.groups.size(); ++g) {
    GroupSummary& group = a.groups[g];
    group.num_records = members[g].size();
    for (const auto& metric : a.metrics) {
      std::vector<double> finals;
      std::vector<double> bests;
      for (const Record* r : members[g]) {
        if (auto v = r->final_metric(metric)) finals.push_back(*v);
        std::optional<double> best;
        for (const auto& e : r->entries) {
          auto m = e.metrics.find(metric);
          if (m == e.metrics.end() || !m->second) continue;
          const double v = *m->second;
          if (!best || (maximized(metric) ? v > *best : v < *best)) best = v;
        }
        if (best) bests.push_back(*best);
      }
      group.final_metrics[metric] = summarize(finals);
      group.best_metrics[metric] = summarize(bests);
    }

    std::map<std::uint64_t, std::pair<std::vector<double>, std::map<std::string, std::vector<double>>>>
        by_round;
    for (const Record* r : members[g]) {
      for (const auto& e : r->entries) {
        auto& slot = by_round[e.round];
        slot.first.push_back(static_cast<double>(e.virtual_time));
        for (const auto& [k, v] : e.metrics) {
          if (v) slot.second[k].push_back(*v);
        }
      }
    }
    for (const auto& [round, slot] : by_round) {
      CurvePoint p;
      p.round = round;
      p.virtual_time = summarize(slot.first);
      for (const auto& metric : a.metrics) {
        auto it = slot.second.find(metric);
        p.metrics[metric] = it == slot.second.end() ? Stat{} : summarize(it->second);
      }
      group.curve.push_back(std::move(p));
    }
  }
  return a;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void stat_cells(std::ostringstream& out, const Stat& s) {
  if (s.count == 0) {
    out << ",,";
  } else {
    out << ',' << format_number(s.mean) << ',' << format_number(s.std);
  }
}

}  // namespace

std::string summary_csv(const Analysis& a) {
  std::ostringstream out;
  out << "group";
  for (const auto& k : a.group_by) out << ',' << csv_field(k);
  out << ",n";
  for (const auto& m : a.metrics) out << ',' << m << "_mean," << m << "_std";
  for (const auto& m : a.metrics) out << ',' << m << "_best_mean," << m << "_best_std";
  out << '\n';
  for (const auto& g : a.groups) {
    out << csv_field(g.label);
    for (const auto& v : g.values) out << ',' << csv_field(v);
    out << ',' << g.num_records;
    for (const auto& m : a.metrics) stat_cells(out, g.final_metrics.at(m));
    for (const auto& m : a.metrics) stat_cells(out, g.best_metrics.at(m));
    out << '\n';
  }
  return out.str();
}

std::string curves_csv(const Analysis& a, const GroupSummary& g) {
  std::ostringstream out;
  out << "round,n,virtual_time_mean,virtual_time_std";
  for (const auto& m : a.metrics) out << ',' << m << "_mean," << m << "_std";
  out << '\n';
  for (const auto& p : g.curve) {
    out << p.round << ',' << p.virtual_time.count;
    stat_cells(out, p.virtual_time);
    for (const auto& m : a.metrics) stat_cells(out, p.metrics.at(m));
    out << '\n';
  }
  return out.str();
}

std::string group_file_stem(const GroupSummary& g) {
  std::string s;
  for (char c : g.label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '.' || c == '=';
    s += ok ? c : '_';
  }
  return s;
}

std::string curves_svg(const Analysis& a, const GroupSummary& g) {
  constexpr double kWidth = 480;
  constexpr double kPanel = 160;
  constexpr double kMargin = 40;
  std::vector<std::string> plotted;
  for (const auto& m : a.metrics) {
    for (const auto& p : g.curve) {
      if (p.metrics.at(m).count > 0) {
        plotted.push_back(m);
        break;
      }
    }
  }
  const double height = kPanel * static_cast<double>(std::max<std::size_t>(plotted.size(), 1));
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<title>" << g.label << "</title>\n";
  for (std::size_t i = 0; i < plotted.size(); ++i) {
    const std::string& m = plotted[i];
    const double top = kPanel * static_cast<double>(i);
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto& p : g.curve) {
      const Stat& s = p.metrics.at(m);
      if (s.count == 0) continue;
      xmin = std::min(xmin, static_cast<double>(p.round));
      xmax = std::max(xmax, static_cast<double>(p.round));
      ymin = std::min(ymin, s.mean);
      ymax = std::max(ymax, s.mean);
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto sx = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin); };
    auto sy = [&](double y) {
      return top + kPanel - kMargin / 2 - (y - ymin) / (ymax - ymin) * (kPanel - 1.5 * kMargin);
    };
    out << "<text x=\"" << kMargin << "\" y=\"" << top + 14 << "\">" << m << " vs round ["
        << format_number(ymin) << ", " << format_number(ymax) << "]</text>\n";
    out << "<rect x=\"" << kMargin << "\" y=\"" << top + kMargin / 2 << "\" width=\""
        << kWidth - 2 * kMargin << "\" height=\"" << kPanel - 1.5 * kMargin
        << "\" fill=\"none\" stroke=\"#999\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& p : g.curve) {
      const Stat& s = p.metrics.at(m);
      if (s.count == 0) continue;
      out << (first ? "" : " ") << format_number(sx(static_cast<double>(p.round))) << ','
          << format_number(sy(s.mean));
      first = false;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::filesystem::path> write_analysis(const Analysis& a,
                                                  const std::filesystem::path& out_dir,
                                                  bool plot) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  written.push_back(out_dir / "summary.csv");
  util::write_text_file(written.back(), summary_csv(a));
  for (const auto& g : a.groups) {
    const std::string stem = "curves_" + group_file_stem(g);
    written.push_back(out_dir / (stem + ".csv"));
    util::write_text_file(written.back(), curves_csv(a, g));
    if (plot) {
      written.push_back(out_dir / (stem + ".svg"));
      util::write_text_file(written.back(), curves_svg(a, g));
    }
  }
  return written;
}

}  // namespace fedsim::exp
