#pragma once

// File formats: curve CSV/JSON, response-trace JSONL, fitted-model JSON.

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "votescale/analytic.hpp"
#include "votescale/errors.hpp"
#include "votescale/scaling_law.hpp"
#include "votescale/simulator.hpp"

namespace votescale {

inline constexpr int kOutputDigits = 10;

inline std::string format_number(double v, int digits = kOutputDigits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

enum class CurveFormat { Csv, Json };

/// Header `k,accuracy,stderr`; the stderr column is empty for analytic curves.
inline void write_curve_csv(std::ostream& out, const PerformanceCurve& curve,
                            int digits = kOutputDigits) {
  out << "k,accuracy,stderr\n";
  for (const auto& pt : curve) {
    out << pt.k << ',' << format_number(pt.accuracy, digits) << ',';
    if (pt.std_error) out << format_number(*pt.std_error, digits);
    out << '\n';
  }
}

inline nlohmann::json curve_to_json(const PerformanceCurve& curve, int digits = kOutputDigits) {
  auto arr = nlohmann::json::array();
  for (const auto& pt : curve) {
    nlohmann::json obj;
    obj["k"] = pt.k;
    // Round through text so the JSON carries the same digits as the CSV.
    obj["accuracy"] = std::stod(format_number(pt.accuracy, digits));
    obj["stderr"] = pt.std_error ? nlohmann::json(std::stod(format_number(*pt.std_error, digits)))
                                 : nlohmann::json(nullptr);
    arr.push_back(std::move(obj));
  }
  return arr;
}

inline void write_curve(std::ostream& out, const PerformanceCurve& curve, CurveFormat format,
                        int digits = kOutputDigits) {
  if (format == CurveFormat::Csv) {
    write_curve_csv(out, curve, digits);
  } else {
    out << curve_to_json(curve, digits).dump(2) << '\n';
  }
}

inline PerformanceCurve parse_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "k,accuracy,stderr") {
    throw InputError("curve CSV must start with header k,accuracy,stderr");
  }
  std::vector<CurvePoint> pts;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 3) {
      throw InputError("curve CSV line " + std::to_string(lineno) + ": expected 3 fields");
    }
    try {
      CurvePoint pt;
      pt.k = std::stoi(cells[0]);
      pt.accuracy = std::stod(cells[1]);
      if (!cells[2].empty()) pt.std_error = std::stod(cells[2]);
      pts.push_back(pt);
    } catch (const std::logic_error&) {
      throw InputError("curve CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return PerformanceCurve(std::move(pts));
}

inline PerformanceCurve parse_curve_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw InputError("curve JSON must be an array");
  std::vector<CurvePoint> pts;
  try {
    for (const auto& obj : doc) {
      CurvePoint pt;
      pt.k = obj.at("k").get<int>();
      pt.accuracy = obj.at("accuracy").get<double>();
      if (obj.contains("stderr") && !obj.at("stderr").is_null()) {
        pt.std_error = obj.at("stderr").get<double>();
      }
      pts.push_back(pt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("curve JSON: ") + e.what());
  }
  return PerformanceCurve(std::move(pts));
}

inline PerformanceCurve parse_curve(std::istream& in, CurveFormat format) {
  if (format == CurveFormat::Csv) return parse_curve_csv(in);
  try {
    return parse_curve_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("curve JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Response traces: one JSON object per line,
//   {"id": "...", "true": "...", "answers": [...], "keep": [0, 1, ...]}
// "keep" is optional; "weight" is an optional extension used when fitting.

inline TraceRecord parse_trace_record(const std::string& line, int lineno) {
  const auto where = "trace line " + std::to_string(lineno) + ": ";
  try {
    const auto obj = nlohmann::json::parse(line);
    TraceRecord rec;
    rec.id = obj.at("id").get<std::string>();
    rec.true_answer = obj.at("true").get<std::string>();
    rec.answers = obj.at("answers").get<std::vector<std::string>>();
    if (obj.contains("keep") && !obj.at("keep").is_null()) {
      std::vector<std::uint8_t> keep;
      for (const auto& f : obj.at("keep")) {
        const int v = f.get<int>();
        if (v != 0 && v != 1) throw InputError(where + "keep flags must be 0 or 1");
        keep.push_back(static_cast<std::uint8_t>(v));
      }
      rec.keep = std::move(keep);
    }
    if (obj.contains("weight") && !obj.at("weight").is_null()) {
      rec.weight = obj.at("weight").get<double>();
    }
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(where + e.what());
  }
}

inline ResponseTrace read_trace_jsonl(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    records.push_back(parse_trace_record(line, lineno));
  }
  return ResponseTrace(std::move(records));
}

inline void write_trace_jsonl(std::ostream& out, const ResponseTrace& trace) {
  for (const auto& r : trace.records()) {
    nlohmann::json obj;
    obj["id"] = r.id;
    obj["true"] = r.true_answer;
    obj["answers"] = r.answers;
    if (r.keep) {
      std::vector<int> keep(r.keep->begin(), r.keep->end());
      obj["keep"] = keep;
    }
    if (r.weight) obj["weight"] = *r.weight;
    out << obj.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Fitted model: {"items": [{"id": ..., "hard": bool, "c": [c1, c2, c3], "weight": w}]}
// Doubles are written in shortest round-trip form, so reading back is exact.

inline nlohmann::json model_to_json(const ScalingModel& model) {
  auto items = nlohmann::json::array();
  for (const auto& f : model.fits()) {
    items.push_back({{"id", f.id},
                     {"hard", f.fit.hard},
                     {"c", {f.fit.c1, f.fit.c2, f.fit.c3}},
                     {"weight", f.weight}});
  }
  return {{"items", items}};
}

inline ScalingModel model_from_json(const nlohmann::json& doc) {
  std::vector<WeightedFit> fits;
  try {
    for (const auto& obj : doc.at("items")) {
      WeightedFit f;
      f.id = obj.at("id").get<std::string>();
      f.fit.hard = obj.at("hard").get<bool>();
      const auto c = obj.at("c").get<std::vector<double>>();
      if (c.size() != 3) throw InputError("model item " + f.id + ": c must have 3 entries");
      f.fit.c1 = c[0];
      f.fit.c2 = c[1];
      f.fit.c3 = c[2];
      f.weight = obj.at("weight").get<double>();
      fits.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
  return ScalingModel(std::move(fits));
}

inline ScalingModel read_model(std::istream& in) {
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
}

inline void write_model(std::ostream& out, const ScalingModel& model) {
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace votescale
