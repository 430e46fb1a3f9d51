#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylespace/eval/evaluate.hpp"
#include "stylespace/provenance.hpp"

namespace stylespace::eval {

/// alpha, signed distance and both oracle scores per row. `conditioned_error`
/// may be empty; otherwise it adds the speaker error of the speaker-conditioned
/// edit at the same alpha.
inline std::string sweep_csv(const SweepReport& rep, const Provenance& prov,
                             const std::vector<double>& conditioned_error = {}) {
  std::ostringstream out;
  out << prov.csv_comment() << '\n';
  out << "# spearman_rho=" << format_double(rep.spearman_rho) << '\n';
  out << "alpha,signed_distance,emotion_axis_score,speaker_axis_error";
  if (!conditioned_error.empty()) out << ",conditioned_speaker_axis_error";
  out << '\n';
  for (std::size_t i = 0; i < rep.alphas.size(); ++i) {
    out << format_double(rep.alphas[i]) << ',' << format_double(rep.signed_distances[i]) << ','
        << format_double(rep.scores[i].emotion_axis_score) << ',' << format_double(rep.scores[i].speaker_axis_error);
    if (!conditioned_error.empty()) out << ',' << format_double(conditioned_error.at(i));
    out << '\n';
  }
  return out.str();
}

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

inline std::string xml_escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Standalone SVG line chart of mean oracle emotion score against alpha.
inline std::string sweep_svg(const SweepReport& rep, const std::string& title, const Provenance& prov) {
  constexpr double width = 480, height = 320, left = 60, right = 20, top = 40, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  std::vector<double> ys;
  for (const auto& s : rep.scores) ys.push_back(s.emotion_axis_score);
  double x0 = rep.alphas.empty() ? 0.0 : rep.alphas.front();
  double x1 = rep.alphas.empty() ? 1.0 : rep.alphas.back();
  double y0 = ys.empty() ? 0.0 : *std::min_element(ys.begin(), ys.end());
  double y1 = ys.empty() ? 1.0 : *std::max_element(ys.begin(), ys.end());
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<!-- " << detail::xml_escape(prov.csv_comment().substr(2)) << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << detail::xml_escape(title) << " (rho " << detail::fixed(rep.spearman_rho) << ")</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    out << "<text x=\"" << detail::fixed(px(xv), 1) << "\" y=\"" << top + ph + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << detail::fixed(xv, 2)
        << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << detail::fixed(py(yv) + 3, 1)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << detail::fixed(yv, 2)
        << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">alpha</text>\n";
  out << "<text x=\"14\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 14 " << top + ph / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">mean oracle emotion score</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (i) out << ' ';
    out << detail::fixed(px(rep.alphas[i]), 2) << ',' << detail::fixed(py(ys[i]), 2);
  }
  out << "\"/>\n";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    out << "<circle cx=\"" << detail::fixed(px(rep.alphas[i]), 2) << "\" cy=\"" << detail::fixed(py(ys[i]), 2)
        << "\" r=\"3\" fill=\"#c0392b\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

inline std::string oneshot_csv(const std::vector<std::pair<int, double>>& cosines, double random_baseline,
                               const Provenance& prov) {
  std::ostringstream out;
  out << prov.csv_comment() << '\n';
  out << "# random_direction_baseline=" << format_double(random_baseline) << '\n';
  out << "emotion_id,cosine\n";
  for (const auto& [e, c] : cosines) out << e << ',' << format_double(c) << '\n';
  return out.str();
}

inline std::string ablation_csv(const AblationReport& rep, const Provenance& prov) {
  return prov.csv_comment() + "\n" + rep.to_csv();
}

inline nlohmann::json ablation_summary(const AblationReport& rep) {
  nlohmann::json variants = nlohmann::json::object();
  for (const auto& v : rep.variants) {
    auto ms = [](const MeanSd& m) { return nlohmann::json{{"mean", m.mean}, {"sd", m.sd}}; };
    variants[to_string(v.variant)] = {
        {"all_ok", v.all_ok()}, {"probe_accuracy", ms(v.probe())}, {"svm_accuracy", ms(v.svm())},
        {"sweep_rho", ms(v.rho())}};
  }
  return {{"variants", variants},
          {"cycle_ordering_holds", rep.cycle_ordering_holds()},
          {"adversary_ordering_holds", rep.adversary_ordering_holds()}};
}

}  // namespace stylespace::eval
