// haarforge command line front end
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "haarforge/factor.hpp"

using namespace haarforge;
using nlohmann::json;

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpaceArgs {
  std::string space = "l1";
  std::vector<double> p;
  int depth = 6;
};

void add_space(CLI::App* c, SpaceArgs& s, const std::string& def = "l1") {
  s.space = def;
  c->add_option("--space", s.space, "l1 | h1 | lp | hp | sup | mixed | triple | hphq")->capture_default_str();
  c->add_option("--p", s.p, "exponents, comma separated")->delimiter(',');
  c->add_option("--depth", s.depth, "depth cap (per axis)")->capture_default_str();
}

double exponent(const SpaceArgs& s, std::size_t i, double def) { return s.p.size() > i ? s.p[i] : def; }

Space make_space(const SpaceArgs& s) {
  int dims = 1;
  NormSpec n;
  Convention conv = Convention::D;
  if (s.space == "l1") n = NormSpec::Lp(1), conv = Convention::Dplus;
  else if (s.space == "h1") n = NormSpec::Hp(1);
  else if (s.space == "lp") n = NormSpec::Lp(exponent(s, 0, 2));
  else if (s.space == "hp") n = NormSpec::Hp(exponent(s, 0, 2));
  else if (s.space == "sup") n = NormSpec::Sup();
  else if (s.space == "mixed" || s.space == "triple") {
    dims = 2;
    std::vector<double> ps{exponent(s, 0, 2), exponent(s, 1, 2)};
    n = s.space == "mixed" ? NormSpec::Mixed(ps) : NormSpec::Triple(ps);
  } else if (s.space == "hphq") {
    dims = 2;
    n = NormSpec::HpHq(exponent(s, 0, 2), exponent(s, 1, 2));
  } else {
    throw Usage("unknown space " + s.space);
  }
  int cap = dims == 1 ? 14 : 7;
  if (s.depth < 0 || s.depth > cap) throw Usage("depth must lie in [0, " + std::to_string(cap) + "] for d = " + std::to_string(dims));
  return Space::make(n, dims, s.depth, conv);
}

PartitionPolicy policy(const std::string& s) {
  if (s == "trivial") return PartitionPolicy::trivial;
  if (s == "parity") return PartitionPolicy::parity;
  if (s == "random") return PartitionPolicy::random;
  throw Usage("unknown partition " + s);
}

std::unique_ptr<Adversary> adversary(const std::string& kind, const std::string& part, double eta, std::uint64_t seed) {
  if (kind == "null") return std::make_unique<NullAdversary>(eta, policy(part), seed);
  if (kind == "random") return std::make_unique<RandomFunctionalAdversary>(seed, eta, 2, policy(part));
  throw Usage("unknown adversary " + kind);
}

std::unique_ptr<Strategy> strategy(const Space& s, bool strict) {
  FactorConfig cfg;
  cfg.strict_l1 = strict;
  return strategy_for(s, cfg);
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

// Artifacts never depend on the wall clock except through "timings".
void emit(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) fail(Errc::invalid_argument, "cannot write " + path);
  f << j.dump(2) << "\n";
}

int verdict(bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << detail << "\n";
  return pass ? 0 : 1;
}

// --config file.json: keys mirror the long flags; flags on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (it + 1 == args.end()) throw Usage("--config needs a path");
  std::string path = *(it + 1);
  args.erase(it, it + 2);
  std::ifstream f(path);
  if (!f) throw Usage("cannot read " + path);
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const json::exception& e) {
    throw Usage(std::string("config: ") + e.what());
  }
  if (!cfg.is_object()) throw Usage("config must be a JSON object");
  for (auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    std::string v;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) v += (i ? "," : "") + (value[i].is_string() ? value[i].get<std::string>() : value[i].dump());
    } else {
      v = value.is_string() ? value.get<std::string>() : value.dump();
    }
    args.push_back(flag);
    args.push_back(v);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"haarforge: dyadic Haar systems, the reproducibility game and factorization certificates"};
  app.require_subcommand(1);
  std::string out;
  std::uint64_t seed = 1;
  app.add_option("--out", out, "JSON artifact path");

  // norms eval
  auto* norms = app.add_subcommand("norms", "norm evaluation")->require_subcommand(1);
  auto* neval = norms->add_subcommand("eval", "evaluate one norm");
  std::string spec = "lp";
  std::vector<double> vec;
  SpaceArgs nsp;
  neval->add_option("--spec", spec, "james | l1 | h1 | lp | hp | sup | mixed | triple | hphq")->capture_default_str();
  neval->add_option("--vector", vec, "coefficients (space coordinates, or the James sequence)")->delimiter(',')->required();
  neval->add_option("--p", nsp.p, "exponents")->delimiter(',');
  neval->add_option("--depth", nsp.depth, "depth cap")->capture_default_str();
  neval->add_option("--seed", seed);
  neval->add_option("--out", out);

  // game run
  auto* game = app.add_subcommand("game", "strategic reproducibility game")->require_subcommand(1);
  auto* grun = game->add_subcommand("run", "play K rounds");
  SpaceArgs gsp;
  int rounds = 7, trials = 1000;
  double C = 1, eta = 0.1, kappa = 0.1;
  std::string adv_kind = "null", part = "trivial";
  bool report = false;
  add_space(grun, gsp, "h1");
  grun->add_option("--rounds", rounds)->capture_default_str();
  grun->add_option("--C", C)->capture_default_str();
  grun->add_option("--eta", eta)->capture_default_str();
  grun->add_option("--adversary", adv_kind, "null | random")->capture_default_str();
  grun->add_option("--partition", part, "trivial | parity | random")->capture_default_str();
  grun->add_option("--trials", trials)->capture_default_str();
  grun->add_flag("--report", report, "L1 report mode instead of strict mode");
  grun->add_option("--seed", seed)->required();
  grun->add_option("--out", out);

  // validate gg
  auto* validate = app.add_subcommand("validate", "structural validators")->require_subcommand(1);
  auto* vgg = validate->add_subcommand("gg", "check conditions (a)-(d) of a Gamlen-Gaudet system");
  SpaceArgs vsp;
  add_space(vgg, vsp, "h1");
  vgg->add_option("--kappa", kappa)->capture_default_str();
  vgg->add_option("--rounds", rounds)->capture_default_str();
  vgg->add_option("--adversary", adv_kind)->capture_default_str();
  vgg->add_option("--partition", part)->capture_default_str();
  vgg->add_option("--trials", trials)->capture_default_str();
  vgg->add_option("--seed", seed)->required();
  vgg->add_option("--out", out);

  // factor run / factor tensor
  auto* factor = app.add_subcommand("factor", "factorization pipeline")->require_subcommand(1);
  auto* frun = factor->add_subcommand("run", "factor the identity through a generated operator");
  auto* ften = factor->add_subcommand("tensor", "L1(L1) tensor lift");
  SpaceArgs fsp;
  double delta = 0.3, noise = 1e-3, eps = 0.1, residual_tol = 0.05, feta = 0.01;
  int source_depth = 1;
  std::string op = "random";
  add_space(frun, fsp, "l1");
  fsp.depth = 10;
  for (auto* c : {frun, ften}) {
    c->add_option("--delta", delta)->capture_default_str();
    c->add_option("--eta", feta)->capture_default_str();
    c->add_option("--eps", eps)->capture_default_str();
    c->add_option("--operator", op, "random | scalar | noisy")->capture_default_str();
    c->add_option("--source-depth", source_depth)->capture_default_str();
    c->add_option("--residual-tol", residual_tol)->capture_default_str();
    c->add_option("--seed", seed)->required();
    c->add_option("--out", out);
  }
  frun->add_option("--noise", noise, "off-diagonal size for --operator noisy")->capture_default_str();
  int tdepth = 4;
  ften->add_option("--depth", tdepth, "depth per axis")->capture_default_str();

  // james demo
  auto* james = app.add_subcommand("james", "James space")->require_subcommand(1);
  auto* jdemo = james->add_subcommand("demo", "I - S on the first n coordinates");
  int n = 12;
  jdemo->add_option("--n", n)->capture_default_str();
  jdemo->add_option("--trials", trials)->capture_default_str();
  jdemo->add_option("--seed", seed)->required();
  jdemo->add_option("--out", out);

  // sandwich test
  auto* sandwich = app.add_subcommand("sandwich", "multiplier norm sandwich")->require_subcommand(1);
  auto* stest = sandwich->add_subcommand("test", "random L1 multipliers against the chain norm bounds");
  int count = 100, sdepth = 5;
  stest->add_option("--count", count)->capture_default_str();
  stest->add_option("--depth", sdepth)->capture_default_str();
  stest->add_option("--seed", seed)->required();
  stest->add_option("--out", out);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Usage& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (neval->parsed()) {
      double v;
      json j{{"spec", spec}, {"vector", vec}};
      if (spec == "james") {
        v = james_norm(vec);
      } else {
        nsp.space = spec;
        Space s = make_space(nsp);
        if (vec.size() != s.size())
          throw Usage("vector has " + std::to_string(vec.size()) + " entries, the space has " + std::to_string(s.size()));
        v = s.norm_of(Eigen::Map<const Eigen::VectorXd>(vec.data(), Eigen::Index(vec.size())));
        j["norm"] = s.norm().name();
      }
      j["value"] = v;
      emit(out, j);
      std::cout << fmt(v) << "\n";
      return 0;
    }

    if (grun->parsed() || vgg->parsed()) {
      bool validating = vgg->parsed();
      Space s = make_space(validating ? vsp : gsp);
      if (validating) eta = 0.1, C = 1;
      auto gs = GameSpace::of(s);
      auto adv = adversary(adv_kind, part, eta, seed);
      auto strat = strategy(s, !report);
      auto t = run_game(gs, *adv, *strat, {rounds, C, eta});
      WinReport w = check_win(t, trials, seed);
      json j{{"transcript", t}, {"win", w}, {"strategy", strat->info()}};
      bool pass = w.all();
      std::string line = "primal=[" + fmt(w.primal.min_ratio) + "," + fmt(w.primal.max_ratio) + "] dual=[" +
                         fmt(w.dual.min_ratio) + "," + fmt(w.dual.max_ratio) + "]";
      if (validating) {
        GGReport r = validate_gg(t, kappa);
        j["gg"] = r;
        pass = pass && r.all();
        line = std::string("a=") + (r.a ? "ok" : "no") + " b=" + (r.b ? "ok" : "no") + " c=" + (r.c ? "ok" : "no") +
               " d=" + (r.d ? (*r.d ? "ok" : "no") : "n/a") + " " + line;
      }
      emit(out, j);
      return verdict(pass, line);
    }

    if (frun->parsed() || ften->parsed()) {
      FactorConfig cfg;
      cfg.source_depth = source_depth;
      cfg.eta = feta;
      cfg.eps = eps;
      cfg.seed = seed;
      FactorCertificate c;
      OperatorMatrix T;
      if (frun->parsed()) {
        Space s = make_space(fsp);
        if (op == "random") T = build_multiplier(s, random_entries(s, delta, 1, true, seed));
        else if (op == "scalar") T = {s, delta * eye(s.size())};
        else if (op == "noisy") T = noisy_operator(s, delta, 1, noise, seed);
        else throw Usage("unknown operator " + op);
        c = factor_pipeline(T, delta, cfg);
      } else {
        if (tdepth < 0 || tdepth > 7) throw Usage("depth must lie in [0, 7] per axis for d = 2");
        Space s = Space::make(NormSpec::Lp(1), 2, tdepth, Convention::Dplus);
        if (op == "random") T = build_multiplier(s, random_entries(s, delta, 1, true, seed));
        else if (op == "scalar") T = {s, delta * eye(s.size())};
        else throw Usage("tensor operators are random or scalar");
        c = tensor_factor_l1l1(T, delta, cfg);
      }
      json j = c;
      j["seed"] = seed;
      emit(out, j);
      bool pass = c.residual.upper <= residual_tol && c.product_upper <= c.predicted_bound;
      return verdict(pass, "norm_product=" + fmt(c.product_upper) + " residual=" + fmt(c.residual.upper) +
                               " predicted_bound=" + fmt(c.predicted_bound) + " route=" + c.route);
    }

    if (jdemo->parsed()) {
      auto d = james_shift_demo(n, trials, seed);
      json j{{"n", n},
             {"diagonal", d.diagonal},
             {"probe_max", d.probe_max},
             {"spreading_max_dev", d.spreading_max_dev},
             {"trials", d.trials}};
      emit(out, j);
      bool unit = std::all_of(d.diagonal.begin(), d.diagonal.end(), [](double v) { return v == 1.0; });
      return verdict(unit && d.spreading_max_dev <= 1e-12,
                     "diagonal=1 probe_max=" + fmt(d.probe_max) + " shift_dev=" + fmt(d.spreading_max_dev));
    }

    if (stest->parsed()) {
      if (sdepth < 0 || sdepth > 14) throw Usage("depth must lie in [0, 14] for d = 1");
      Space s = Space::make(NormSpec::Lp(1), 1, sdepth, Convention::Dplus);
      json runs = json::array();
      int held = 0;
      for (int k = 0; k < count; ++k) {
        auto r = sandwich_check(s, random_entries(s, -1, 1, false, split_seed(seed, std::uint64_t(k))));
        held += r.holds();
        runs.push_back(r);
      }
      emit(out, {{"depth", sdepth}, {"runs", runs}, {"held", held}});
      return verdict(held == count, "held=" + std::to_string(held) + "/" + std::to_string(count));
    }
  } catch (const Usage& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cout << "FAIL " << e.what() << "\n";
    return 1;
  }
  return 2;
}
