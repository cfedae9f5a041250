#include "spherefall/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace spherefall {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_str(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "resolution.L") cfg.L = std::stoi(val);
      else if (key == "resolution.N") cfg.N = std::stoi(val);
      else if (key == "modes") {
        cfg.modes.clear();
        std::istringstream ms(val);
        std::string tok;
        while (std::getline(ms, tok, ',')) {
          tok = trim(tok);
          if (!tok.empty()) cfg.modes.push_back(std::stoi(tok));
        }
      } else if (key == "lambda.min") cfg.lambda_min = std::stod(val);
      else if (key == "lambda.max") cfg.lambda_max = std::stod(val);
      else if (key == "lambda.points") cfg.lambda_points = std::stoi(val);
      else if (key == "radial.map") cfg.radial_map = val;
      else if (key == "radial.scale") cfg.radial_scale = std::stod(val);
      else if (key == "radial.rinf") cfg.radial_rinf = std::stod(val);
      else if (key == "quad.margin") cfg.quad_margin = std::stoi(val);
      else if (key == "cutoff.ra") cfg.cutoff_ra = std::stod(val);
      else if (key == "cutoff.rb") cfg.cutoff_rb = std::stod(val);
      else if (key == "tol.newton") cfg.tol_newton = std::stod(val);
      else if (key == "tol.eigen") cfg.tol_eigen = std::stod(val);
      else if (key == "tol.root") cfg.tol_root = std::stod(val);
      else if (key == "seed") cfg.seed = std::stoul(val);
      else if (key == "out") cfg.out_dir = val;
      else if (key == "manufactured.lambda_star") cfg.manufactured_lambda_star = std::stod(val);
      else throw std::runtime_error("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config: bad value for '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (L < 1 || N < 2) throw std::runtime_error("config: resolution.L >= 1 and resolution.N >= 2 required");
  if (modes.empty()) throw std::runtime_error("config: modes list must not be empty");
  for (int m : modes)
    if (m < 0 || m > 3) throw std::runtime_error("config: modes must lie in {0,1,2,3}");
  if (lambda_min < 0 || lambda_max < lambda_min) throw std::runtime_error("config: need 0 <= lambda.min <= lambda.max");
  if (lambda_points < 1) throw std::runtime_error("config: lambda.points >= 1 required");
  if (radial_map != "algebraic" && radial_map != "truncated")
    throw std::runtime_error("config: radial.map must be algebraic or truncated");
  if (!(radial_scale > 0) || !(radial_rinf > 1)) throw std::runtime_error("config: bad radial map parameters");
  if (quad_margin < 0) throw std::runtime_error("config: quad.margin >= 0 required");
  if (!(cutoff_ra >= 1.0) || !(cutoff_ra < cutoff_rb)) throw std::runtime_error("config: need 1 <= cutoff.ra < cutoff.rb");
  if (!(tol_newton > 0) || !(tol_eigen > 0) || !(tol_root > 0)) throw std::runtime_error("config: tolerances must be positive");
}

RadialMapKind RunConfig::map_kind() const {
  return radial_map == "truncated" ? RadialMapKind::truncated : RadialMapKind::algebraic;
}

std::vector<double> RunConfig::lambda_grid() const {
  std::vector<double> out;
  if (lambda_points == 1 || lambda_max == lambda_min) {
    out.push_back(lambda_min);
    return out;
  }
  for (int i = 0; i < lambda_points; ++i)
    out.push_back(lambda_min + (lambda_max - lambda_min) * i / (lambda_points - 1));
  return out;
}

namespace {
void discretization_keys(const RunConfig& c, std::map<std::string, std::string>& kv) {
  kv["resolution.L"] = std::to_string(c.L);
  kv["resolution.N"] = std::to_string(c.N);
  kv["radial.map"] = c.radial_map;
  kv["radial.scale"] = fmt17(c.radial_scale);
  kv["radial.rinf"] = fmt17(c.radial_rinf);
  kv["quad.margin"] = std::to_string(c.quad_margin);
  kv["cutoff.ra"] = fmt17(c.cutoff_ra);
  kv["cutoff.rb"] = fmt17(c.cutoff_rb);
  kv["tol.newton"] = fmt17(c.tol_newton);
  kv["seed"] = std::to_string(c.seed);
}
}  // namespace

std::string RunConfig::discretization_text() const {
  std::map<std::string, std::string> kv;
  discretization_keys(*this, kv);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  discretization_keys(*this, kv);
  {
    std::string ms;
    for (size_t i = 0; i < modes.size(); ++i) ms += (i ? "," : "") + std::to_string(modes[i]);
    kv["modes"] = ms;
  }
  kv["lambda.min"] = fmt17(lambda_min);
  kv["lambda.max"] = fmt17(lambda_max);
  kv["lambda.points"] = std::to_string(lambda_points);
  kv["tol.eigen"] = fmt17(tol_eigen);
  kv["tol.root"] = fmt17(tol_root);
  kv["manufactured.lambda_star"] = fmt17(manufactured_lambda_star);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::fingerprint() const { return fnv1a_str(canonical_text()); }

std::uint64_t RunConfig::discretization_fingerprint() const { return fnv1a_str(discretization_text()); }

}  // namespace spherefall
