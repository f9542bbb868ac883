#include "instab/common.hpp"

namespace instab {

std::string_view measure_name(Measure m) noexcept {
  switch (m) {
    case Measure::sd: return "sd";
    case Measure::pwd: return "pwd";
    case Measure::kappa: return "kappa";
    case Measure::jsd: return "jsd";
    case Measure::svcca: return "svcca";
    case Measure::op: return "op";
    case Measure::cka: return "cka";
  }
  return "?";
}

Measure parse_measure(std::string_view name) {
  for (Measure m : kAllMeasures) {
    if (measure_name(m) == name) return m;
  }
  throw InvalidArgument("unknown measure '" + std::string(name) + "'");
}

std::vector<Measure> parse_measure_list(std::string_view text) {
  std::vector<Measure> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!token.empty()) {
      const Measure m = parse_measure(token);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw InvalidArgument("empty measure list");
  return out;
}

std::string_view metric_name(MetricKind m) noexcept {
  switch (m) {
    case MetricKind::accuracy: return "accuracy";
    case MetricKind::f1: return "f1";
    case MetricKind::mcc: return "mcc";
  }
  return "?";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "accuracy") return MetricKind::accuracy;
  if (name == "f1") return MetricKind::f1;
  if (name == "mcc") return MetricKind::mcc;
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

}  // namespace instab
