#include "svpfp/config.hpp"

#include <cmath>
#include <json.hpp>
#include <set>

#include "svpfp/field_solver.hpp"
#include "svpfp/hypo_energy.hpp"
#include "svpfp/io.hpp"

namespace svpfp {

using json = nlohmann::json;

namespace {

const std::set<std::string> kSections{"grid", "initial", "noise", "solver", "picard", "hypo", "ensemble", "convergence", "output"};

class Reader {
 public:
  Reader(const json& doc, std::string name) : name_(std::move(name)) {
    if (doc.contains(name_)) {
      node_ = &doc.at(name_);
      if (!node_->is_object()) fail(ErrorKind::Config, name_ + ": section must be an object");
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    const json& v = node_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0) throw std::invalid_argument("expected a nonnegative integer");
        }
        out = v.get<T>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (v.is_string()) {
          const auto s = v.get<std::string>();
          if (s == "inf") out = std::numeric_limits<T>::infinity();
          else throw std::invalid_argument("expected a number");
        } else if (v.is_null()) {
          out = std::numeric_limits<T>::infinity();
        } else {
          if (!v.is_number()) throw std::invalid_argument("expected a number");
          out = v.get<T>();
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
        out = v.get<std::string>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception& e) {
      fail(ErrorKind::Config, name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items())
      if (!seen_.count(key)) fail(ErrorKind::Config, name_ + "." + key + ": unknown key");
  }

  [[noreturn]] void bad(const std::string& key, const std::string& message) const {
    fail(ErrorKind::Config, name_ + "." + key + ": " + message);
  }

  void require(bool ok, const std::string& key, const std::string& message) const {
    if (!ok) bad(key, message);
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

template <typename E>
E pick(const Reader& r, const std::string& key, const std::string& value,
       std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  r.bad(key, "must be one of " + names);
}

json set_path(json doc, const std::string& path, const json& value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) fail(ErrorKind::Config, "override " + path + ": empty key");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return doc;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    if (!node->is_object()) fail(ErrorKind::Config, "override " + path + ": " + key + " is not a section");
    start = dot + 1;
  }
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, what + ": " + e.what());
  }
}

}  // namespace

std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& overrides) {
  json doc = parse_json(json_text, "config");
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "override must be KEY=VALUE: " + o);
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    doc = set_path(std::move(doc), key, value);
  }
  return doc.dump();
}

RunConfig parse_config(const std::string& json_text) {
  const json doc = parse_json(json_text, "config");
  if (!doc.is_object()) fail(ErrorKind::Config, "config: top level must be an object");
  RunConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (!kSections.count(key)) fail(ErrorKind::Config, key + ": unknown section");
    cfg.sections.push_back(key);
  }

  {
    Reader r(doc, "grid");
    r.get("dim", cfg.grid.dim);
    r.get("nx", cfg.grid.nx);
    r.get("nv", cfg.grid.nv);
    r.get("vmax", cfg.grid.vmax);
    r.get("dealias_fraction", cfg.grid.dealias_fraction);
    r.finish();
    try {
      cfg.grid.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("grid: ") + e.what());
    }
  }
  {
    Reader r(doc, "initial");
    auto& in = cfg.initial;
    r.get("kind", in.kind);
    r.get("amplitude", in.amplitude);
    r.get("mode", in.mode);
    r.get("drift", in.drift);
    r.get("thermal", in.thermal);
    r.get("beam_velocity", in.beam_velocity);
    r.get("log2_kmax", in.log2_kmax);
    r.get("seed", in.seed);
    r.get("path", in.path);
    r.get("regularize", in.regularize);
    r.finish();
    const std::set<std::string> kinds{"maxwellian", "perturbed_maxwellian", "two_stream", "rough", "snapshot"};
    r.require(kinds.count(in.kind) > 0, "kind", "must be one of maxwellian, perturbed_maxwellian, two_stream, rough, snapshot");
    r.require(in.thermal > 0.0, "thermal", "must be positive");
    r.require(in.regularize >= 0, "regularize", "must be nonnegative");
    r.require(in.kind != "snapshot" || !in.path.empty(), "path", "required for kind snapshot");
    r.require(in.kind != "rough" || cfg.grid.dim == 1, "kind", "rough data needs grid.dim = 1");
  }
  {
    Reader r(doc, "noise");
    auto& n = cfg.noise;
    std::string law = "power";
    r.get("seed", n.seed);
    r.get("realization", n.realization);
    r.get("substeps", n.substeps);
    r.get("law", law);
    r.get("power", n.spec.power);
    r.get("gaussian_lambda", n.spec.gaussian_lambda);
    r.get("amplitude", n.spec.amplitude);
    r.get("max_wavenumber", n.spec.max_wavenumber);
    r.get("regularity_target", n.spec.regularity_target);
    r.get("coloring_csv", n.coloring_csv);
    r.get("include_magnetic", n.spec.include_magnetic);
    std::vector<double> mscale{n.spec.magnetic_scale[0], n.spec.magnetic_scale[1]};
    r.get("magnetic_scale", mscale);
    r.get("speed_of_light", n.spec.speed_of_light);
    r.finish();
    n.spec.dim = cfg.grid.dim;
    n.spec.law = pick<ColoringLaw>(r, "law", law, {{"power", ColoringLaw::Power}, {"gaussian", ColoringLaw::Gaussian},
                                                    {"custom", ColoringLaw::Custom}, {"none", ColoringLaw::None}});
    r.require(mscale.size() == 2, "magnetic_scale", "needs two entries");
    n.spec.magnetic_scale = {mscale[0], mscale[1]};
    r.require(n.substeps >= 1, "substeps", "must be >= 1");
    r.require(n.spec.max_wavenumber >= 1, "max_wavenumber", "must be >= 1");
    r.require(n.spec.amplitude >= 0.0, "amplitude", "must be nonnegative");
    r.require(n.spec.speed_of_light > 0.0, "speed_of_light", "must be positive");
    if (n.spec.law == ColoringLaw::Custom) {
      r.require(!n.coloring_csv.empty(), "coloring_csv", "required for law custom");
      n.spec.custom_table = read_coloring_csv(n.coloring_csv, cfg.grid.dim);
    }
    coloring(n.spec);
  }
  {
    Reader r(doc, "solver");
    auto& s = cfg.solver;
    auto& p = s.plan;
    std::string backend = "eulerian", splitting = "strang", scheme = "stratonovich_heun", init = "grid_weighted";
    double t_final = -1.0;
    r.get("backend", backend);
    r.get("dt", p.dt);
    r.get("steps", s.steps);
    r.get("t_final", t_final);
    r.get("nu", p.nu);
    r.get("R", p.cutoff.R);
    r.get("s0", p.cutoff_norm.sigma);
    r.get("m0", p.cutoff_norm.m);
    r.get("epsilon", p.mollifier_epsilon);
    r.get("splitting", splitting);
    r.get("self_field", p.self_field);
    r.get("field_sign", p.field_sign);
    r.get("kernel_csv", s.kernel_csv);
    r.get("fk_replicas", s.fk_replicas);
    r.get("fk_seed", s.fk_seed);
    r.get("scheme", scheme);
    r.get("particles", s.particles);
    r.get("particle_init", init);
    r.finish();
    s.backend = pick<Backend>(r, "backend", backend, {{"eulerian", Backend::Eulerian}, {"lagrangian_fk", Backend::LagrangianFk}, {"pic", Backend::Pic}});
    p.splitting = pick<SplittingOrder>(r, "splitting", splitting, {{"strang", SplittingOrder::Strang}, {"lie", SplittingOrder::Lie}});
    s.scheme = pick<PushScheme>(r, "scheme", scheme, {{"euler_maruyama", PushScheme::EulerMaruyama}, {"stratonovich_heun", PushScheme::StratonovichHeun}});
    s.particle_init = pick<InitStrategy>(r, "particle_init", init, {{"grid_weighted", InitStrategy::GridWeighted}, {"rejection_sampled", InitStrategy::RejectionSampled}});
    r.require(p.dt > 0.0, "dt", "must be positive");
    r.require(p.nu >= 0.0, "nu", "must be nonnegative");
    r.require(p.cutoff.R > 0.0, "R", "must be positive");
    r.require(p.cutoff_norm.sigma >= 0, "s0", "must be nonnegative");
    r.require(p.mollifier_epsilon >= 0.0, "epsilon", "must be nonnegative");
    r.require(p.field_sign == 1.0 || p.field_sign == -1.0, "field_sign", "must be +1 or -1");
    r.require(s.fk_replicas >= 1, "fk_replicas", "must be >= 1");
    if (t_final >= 0.0) {
      const double n = t_final / p.dt;
      r.require(std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n), "t_final", "must be a multiple of dt");
      s.steps = static_cast<std::uint64_t>(std::llround(n));
    }
    if (!s.kernel_csv.empty()) p.kernel = table_kernel(read_kernel_csv(s.kernel_csv, cfg.grid.dim));
    try {
      p.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("solver: ") + e.what());
    }
  }
  {
    Reader r(doc, "picard");
    auto& pc = cfg.picard;
    std::string backend = "eulerian";
    r.get("j_max", pc.j_max);
    r.get("T", pc.T);
    r.get("delta", pc.delta);
    r.get("backend", backend);
    r.get("fk_replicas", pc.fk_replicas);
    r.get("compare_direct", pc.compare_direct);
    r.finish();
    pc.backend = pick<PicardBackend>(r, "backend", backend, {{"eulerian", PicardBackend::Eulerian}, {"lagrangian_fk", PicardBackend::LagrangianFk}});
    r.require(pc.j_max >= 2, "j_max", "must be >= 2");
    r.require(pc.T > 0.0 && pc.T <= 1.0, "T", "must lie in (0, 1]");
    r.require(pc.delta > 0.0 && pc.delta < 1.0 / 6.0, "delta", "must lie in (0, 1/6)");
  }
  {
    Reader r(doc, "hypo");
    auto& h = cfg.hypo;
    r.get("epsilon", h.epsilon);
    r.get("sigma", h.sigma);
    r.get("m", h.m);
    r.get("nu", h.nu);
    r.get("log2_kmax", h.log2_kmax);
    r.get("amplitude", h.amplitude);
    r.get("t_min", h.t_min);
    r.get("t_max", h.t_max);
    r.get("samples", h.samples);
    r.get("source", h.source);
    r.get("seed", h.seed);
    r.finish();
    r.require(h.epsilon > 0.0 && h.epsilon < 1.0, "epsilon", "must lie in (0, 1)");
    r.require(h.sigma >= 0 && h.sigma <= 4, "sigma", "must lie in [0, 4]");
    r.require(h.nu > 0.0, "nu", "must be positive");
    r.require(h.t_min > 0.0 && h.t_max > h.t_min, "t_max", "needs 0 < t_min < t_max");
    r.require(h.samples >= 8, "samples", "must be >= 8");
    r.require(h.source == "propagator" || h.source == "grid", "source", "must be propagator or grid");
    r.require(h.log2_kmax >= 1 && h.log2_kmax <= 24, "log2_kmax", "must lie in [1, 24]");
  }
  {
    Reader r(doc, "ensemble");
    auto& e = cfg.ensemble;
    r.get("realizations", e.realizations);
    r.get("base_seed", e.base_seed);
    r.get("cadence", e.cadence);
    r.get("levels", e.levels);
    r.get("moments", e.moments);
    r.get("bootstrap", e.bootstrap);
    r.get("energy_sigma", e.energy_sigma);
    r.get("energy_epsilon", e.energy_epsilon);
    r.finish();
    r.require(e.realizations >= 1, "realizations", "must be >= 1");
    r.require(e.cadence >= 1, "cadence", "must be >= 1");
    r.require(e.bootstrap >= 1, "bootstrap", "must be >= 1");
    r.require(e.energy_epsilon > 0.0 && e.energy_epsilon < 1.0, "energy_epsilon", "must lie in (0, 1)");
  }
  {
    Reader r(doc, "convergence");
    auto& c = cfg.convergence;
    r.get("dt_levels", c.dt_levels);
    r.get("nx_levels", c.nx_levels);
    r.get("t_final", c.t_final);
    r.finish();
    r.require(c.dt_levels >= 2 && c.dt_levels <= 10, "dt_levels", "must lie in [2, 10]");
    r.require(c.t_final > 0.0, "t_final", "must be positive");
    for (auto n : c.nx_levels) r.require(n >= 8 && (n & (n - 1)) == 0, "nx_levels", "entries must be powers of two >= 8");
  }
  {
    Reader r(doc, "output");
    auto& o = cfg.output;
    r.get("dir", o.dir);
    r.get("cadence", o.cadence);
    r.get("snapshot_times", o.snapshot_times);
    r.finish();
    r.require(o.cadence >= 1, "cadence", "must be >= 1");
  }
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error&) {
    fail(ErrorKind::Config, "cannot read config file " + path);
  }
  return parse_config(apply_overrides(text, overrides));
}

DistributionField make_initial(const RunConfig& config) {
  const auto& in = config.initial;
  const GridSpec& g = config.grid;
  DistributionField f;
  if (in.kind == "snapshot") {
    f = load_snapshot(in.path);
    if (!(f.grid == g)) fail(ErrorKind::Config, "initial.path: snapshot grid differs from [grid]");
    f.time = 0.0;
  } else if (in.kind == "rough") {
    f = LinearKfpPropagator::rough(1.0, in.log2_kmax, in.amplitude).sample(g, in.seed);
  } else {
    const double th = in.thermal;
    auto gauss = [&](double v, double u) {
      return std::exp(-0.5 * (v - u) * (v - u) / th) / std::sqrt(kTwoPi * th);
    };
    f = DistributionField::from_function(g, [&](std::span<const double> x, std::span<const double> v) {
      double m = 1.0;
      for (std::size_t a = 0; a < v.size(); ++a) {
        if (a == 0 && in.kind == "two_stream")
          m *= 0.5 * (gauss(v[a], in.drift + in.beam_velocity) + gauss(v[a], in.drift - in.beam_velocity));
        else
          m *= gauss(v[a], a == 0 ? in.drift : 0.0);
      }
      const double pert = in.kind == "maxwellian" ? 0.0 : in.amplitude * std::cos(in.mode * x[0]);
      return (1.0 + pert) * m;
    });
  }
  if (in.regularize > 0) f = regularize_initial(f, in.regularize).field;
  return f;
}

std::shared_ptr<const NoiseSource> make_noise(const RunConfig& config, std::uint64_t horizon) {
  const auto& n = config.noise;
  NoisePath path{n.seed, n.realization, config.solver.plan.dt / static_cast<double>(n.substeps), n.substeps, horizon};
  return std::make_shared<NoiseSource>(n.spec, path);
}

}  // namespace svpfp
