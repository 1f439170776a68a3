#include "twostate/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace twostate {

using nlohmann::json;

namespace {

std::string symbol_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(ErrorCode::BadEmission, "alphabet symbols must be strings or integers");
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

RawModel raw_model_from_json(const json& doc) {
  try {
    RawModel raw;
    const auto& t = doc.at("transitions");
    if (!t.is_array() || t.size() != 2 || t[0].size() != 2 || t[1].size() != 2)
      throw Error(ErrorCode::RowSumViolation, "transitions must be a 2x2 array");
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) raw.transitions[i][j] = t[i][j].get<double>();

    if (doc.contains("initial")) {
      const auto& init = doc.at("initial");
      if (init.is_string()) {
        if (init.get<std::string>() != "stationary")
          throw Error(ErrorCode::BadInitial, "initial must be \"stationary\" or a 2-vector");
      } else {
        if (!init.is_array() || init.size() != 2)
          throw Error(ErrorCode::BadInitial, "initial must be \"stationary\" or a 2-vector");
        raw.initial = std::array<double, 2>{init[0].get<double>(), init[1].get<double>()};
      }
    }

    const auto& em = doc.at("emissions");
    const auto type = em.at("type").get<std::string>();
    if (type == "categorical") {
      std::vector<std::string> alphabet;
      for (const auto& s : em.at("alphabet")) alphabet.push_back(symbol_text(s));
      raw.emit_a = EmissionModel::categorical(alphabet, em.at("probs_a").get<std::vector<double>>());
      raw.emit_b = EmissionModel::categorical(alphabet, em.at("probs_b").get<std::vector<double>>());
    } else if (type == "gaussian") {
      raw.emit_a = EmissionModel::gaussian(em.at("a").at("mean").get<double>(),
                                           em.at("a").at("variance").get<double>());
      raw.emit_b = EmissionModel::gaussian(em.at("b").at("mean").get<double>(),
                                           em.at("b").at("variance").get<double>());
    } else {
      throw Error(ErrorCode::BadEmission, "unknown emission type '" + type + "'");
    }
    return raw;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadArgument, std::string("malformed model document: ") + e.what());
  }
}

TwoStateHmm model_from_json(const json& doc) { return validate_model(raw_model_from_json(doc)); }

json model_to_json(const TwoStateHmm& model) {
  json doc;
  const auto& t = model.transitions();
  doc["transitions"] = {{t[0][0], t[0][1]}, {t[1][0], t[1][1]}};
  if (model.stationary_start()) {
    doc["initial"] = "stationary";
  } else {
    doc["initial"] = {model.initial()[0], model.initial()[1]};
  }
  const auto& ea = model.emission(State::a);
  const auto& eb = model.emission(State::b);
  if (ea.is_categorical()) {
    doc["emissions"] = {{"type", "categorical"},
                        {"alphabet", ea.categorical_params().alphabet},
                        {"probs_a", ea.categorical_params().probs},
                        {"probs_b", eb.categorical_params().probs}};
  } else {
    doc["emissions"] = {
        {"type", "gaussian"},
        {"a", {{"mean", ea.gaussian_params().mean}, {"variance", ea.gaussian_params().variance}}},
        {"b", {{"mean", eb.gaussian_params().mean}, {"variance", eb.gaussian_params().variance}}}};
  }
  return doc;
}

TwoStateHmm load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open model file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadArgument, "model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

Observation parse_observation(const TwoStateHmm& model, std::string_view token) {
  if (model.categorical()) {
    const auto& alphabet = model.emission(State::a).categorical_params().alphabet;
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
      if (alphabet[i] == token) return static_cast<Observation>(i);
    }
    throw Error(ErrorCode::BadObservation, "symbol '" + std::string(token) + "' is not in the alphabet");
  }
  double x = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x))
    throw Error(ErrorCode::BadObservation, "'" + std::string(token) + "' is not a finite real");
  return x;
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_observation(const TwoStateHmm& model, Observation x) {
  if (model.categorical()) {
    return model.emission(State::a).categorical_params().alphabet.at(static_cast<std::size_t>(x));
  }
  return format_real(x);
}

std::vector<Observation> read_observations(std::istream& in, const TwoStateHmm& model) {
  std::vector<Observation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto token = trim(line);
    if (token.empty()) continue;
    try {
      out.push_back(parse_observation(model, token));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read error on observation stream");
  return out;
}

std::vector<Observation> load_observations(const std::filesystem::path& path, const TwoStateHmm& model) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open observation file " + path.string());
  return read_observations(in, model);
}

void write_observations(std::ostream& out, const TwoStateHmm& model, const std::vector<Observation>& xs) {
  for (Observation x : xs) out << format_observation(model, x) << '\n';
}

}  // namespace twostate
