#include "qpkam/io.hpp"

#include <cmath>

#include "qpkam/errors.hpp"

namespace qpkam {

namespace {

using nlohmann::json;

json k_json(const Lattice& lat, std::size_t idx, int n) {
  return std::vector<int>(lat.k(idx), lat.k(idx) + n);
}

Frequency freq_from(const json& j) {
  return Frequency(j.at("omega").get<std::vector<double>>());
}

template <class F>
F guarded(const char* what, F (*fn)(const json&), const json& j) {
  try {
    return fn(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

ShellFunction shell_impl(const json& j) {
  ShellFunction f(freq_from(j), j.at("K").get<int>(), j.value("width", 0.0));
  for (const auto& c : j.at("coeffs")) f.at(c.at("k").get<std::vector<int>>()) = cd(c.at("re"), c.at("im"));
  return f;
}

StripFunction strip_impl(const json& j) {
  StripFunction f(freq_from(j), StripDomain(j.at("width").get<double>(), j.at("s").get<double>()),
                  j.at("K").get<int>(), j.at("J").get<int>());
  for (const auto& c : j.at("coeffs")) {
    const int jj = c.at("j").get<int>();
    if (jj < 0 || jj > f.J()) throw ConfigError("Chebyshev degree out of range");
    f.at(f.lattice().index(c.at("k").get<std::vector<int>>()), jj) = cd(c.at("re"), c.at("im"));
  }
  return f;
}

InvariantCurve curve_impl(const json& j) {
  InvariantCurve c;
  c.phi = shell_impl(j.at("phi"));
  c.psi = shell_impl(j.at("psi"));
  const auto& r = j.at("rotation");
  c.rotation = RotationNumber{r.at("alpha"), r.at("gamma"), r.at("tau"), r.at("a"), r.at("b"), r.at("K")};
  c.defect = j.at("defect");
  return c;
}

}  // namespace

json to_json(const ShellFunction& f) {
  json coeffs = json::array();
  const Lattice& lat = f.lattice();
  for (std::size_t idx = 0; idx < lat.size(); ++idx)
    if (f[idx] != cd(0.0)) coeffs.push_back({{"k", k_json(lat, idx, f.n())}, {"re", f[idx].real()}, {"im", f[idx].imag()}});
  return {{"omega", f.freq().omega}, {"width", f.width()}, {"K", f.K()}, {"coeffs", coeffs}};
}

json to_json(const StripFunction& f) {
  json coeffs = json::array();
  const Lattice& lat = f.lattice();
  for (std::size_t idx = 0; idx < lat.size(); ++idx)
    for (int j = 0; j <= f.J(); ++j)
      if (f.at(idx, j) != cd(0.0))
        coeffs.push_back(
            {{"k", k_json(lat, idx, f.n())}, {"j", j}, {"re", f.at(idx, j).real()}, {"im", f.at(idx, j).imag()}});
  return {{"omega", f.freq().omega}, {"width", f.domain().r}, {"s", f.domain().s}, {"K", f.K()}, {"J", f.J()},
          {"coeffs", coeffs}};
}

ShellFunction shell_from_json(const json& j) { return guarded("shell function", &shell_impl, j); }
StripFunction strip_from_json(const json& j) { return guarded("strip function", &strip_impl, j); }
InvariantCurve curve_from_json(const json& j) { return guarded("curve", &curve_impl, j); }

json to_json(const Frequency& f) {
  return {{"omega", f.omega}, {"c", f.c}, {"sigma0", f.sigma0}, {"K", f.K}};
}

json to_json(const RotationNumber& r) {
  return {{"alpha", r.alpha}, {"gamma", r.gamma}, {"tau", r.tau}, {"a", r.a}, {"b", r.b}, {"K", r.K}};
}

json to_json(const RotationCertificate& c) {
  static const char* lines[] = {"none", "parameters", "interval", "lattice"};
  json j = {{"accepted", c.accepted},
            {"rotation", to_json(c.rotation)},
            {"reject_line", lines[static_cast<int>(c.line)]},
            {"min_margin", c.min_margin},
            {"message", c.message}};
  if (!c.accepted && c.line == RejectLine::Lattice)
    j["violation"] = {{"k", c.k}, {"j", c.j}, {"distance", c.distance}, {"margin", c.margin}};
  return j;
}

json to_json(const DivisorSumReport& r) {
  return {{"m", r.m}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"pass", r.pass}};
}

json to_json(const InvariantCurve& c) {
  return {{"rotation", to_json(c.rotation)}, {"defect", c.defect}, {"phi", to_json(c.phi)}, {"psi", to_json(c.psi)}};
}

json trace_json(const std::vector<LevelRecord>& trace) {
  json out = json::array();
  for (const auto& r : trace) out.push_back(r.to_json());
  return out;
}

}  // namespace qpkam
