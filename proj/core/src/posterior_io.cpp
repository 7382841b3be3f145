#include <fstream>

#include "json.hpp"
#include "odbguard/error.hpp"
#include "odbguard/model.hpp"
#include "json_convert.hpp"

namespace odbguard {

using nlohmann::json;

void save_posterior(const PosteriorSamples& samples, std::ostream& out) {
  if (samples.draws.empty()) throw UsageError("refusing to save a posterior without draws");
  json doc;
  doc["version"] = kPosteriorSchemaVersion;
  doc["hyperparams"] = samples.hyperparams;
  doc["n_records_fitted"] = samples.n_records_fitted;
  json draws = json::array();
  for (const auto& d : samples.draws) {
    json comps = json::array();
    for (const auto& c : d.components) {
      comps.push_back({{"pi", c.pi}, {"beta", c.beta}, {"sigma2", c.sigma2}});
    }
    draws.push_back({{"alpha", d.alpha}, {"components", std::move(comps)}});
  }
  doc["draws"] = std::move(draws);
  out << doc.dump() << '\n';
}

void save_posterior(const PosteriorSamples& samples, const std::filesystem::path& path) {
  if (samples.draws.empty()) throw UsageError("refusing to save a posterior without draws");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_posterior(samples, out);
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

PosteriorSamples load_posterior(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("posterior JSON: ") + e.what());
  }
  try {
    const int version = doc.at("version").get<int>();
    if (version != kPosteriorSchemaVersion) {
      throw VersionMismatch("posterior schema version " + std::to_string(version) +
                            " is not supported (expected " +
                            std::to_string(kPosteriorSchemaVersion) + ")");
    }
    PosteriorSamples samples;
    samples.hyperparams = doc.at("hyperparams").get<HyperParams>();
    samples.n_records_fitted = doc.at("n_records_fitted").get<std::size_t>();
    for (const auto& d : doc.at("draws")) {
      PosteriorDraw draw;
      draw.alpha = d.at("alpha").get<double>();
      for (const auto& c : d.at("components")) {
        MixtureComponent comp;
        comp.pi = c.at("pi").get<double>();
        comp.beta = c.at("beta").get<std::array<double, 3>>();
        comp.sigma2 = c.at("sigma2").get<double>();
        draw.components.push_back(comp);
      }
      samples.draws.push_back(std::move(draw));
    }
    if (samples.draws.empty()) throw ParseError("posterior JSON: no draws");
    return samples;
  } catch (const json::exception& e) {
    throw ParseError(std::string("posterior JSON: ") + e.what());
  }
}

PosteriorSamples load_posterior(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return load_posterior(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

HyperParams load_hyperparams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    auto hp = json::parse(in).get<HyperParams>();
    hp.validate();
    return hp;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace odbguard
