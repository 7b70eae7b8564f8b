// Pipeline driver: ingest -> fit -> evaluate -> cdb, plus a DGP simulator.
// Every command is a pure function of its inputs and the seed; re-runs are
// byte-identical.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dycop/copulas.hpp"
#include "dycop/estimation.hpp"
#include "dycop/margins.hpp"
#include "dycop/market_data.hpp"
#include "dycop/parallel.hpp"
#include "dycop/risk.hpp"
#include "dycop/rng.hpp"
#include "dycop/sim.hpp"
#include "dycop/special.hpp"
#include "dycop/stat_tests.hpp"

using nlohmann::json;
using namespace dycop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConvergence = 2;
constexpr int kExitInternal = 3;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

md::ReturnPanel load_panel(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw InputError("cannot open panel " + path);
  probe.close();
  return md::read_panel_csv(path);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  json j;
  in >> j;
  return j;
}

std::size_t split_index(const md::ReturnPanel& panel, const std::string& split_date) {
  const md::Date d = md::parse_date(split_date);
  if (d <= panel.dates.front() || panel.dates.back() <= d) {
    throw InputError("split date must lie strictly inside the panel range");
  }
  std::size_t idx = 0;
  while (idx < panel.size() && panel.dates[idx] <= d) ++idx;
  return idx;  // first out-of-sample index
}

md::ReturnPanel slice_panel(const md::ReturnPanel& panel, std::size_t from, std::size_t to) {
  md::ReturnPanel out;
  out.dates.assign(panel.dates.begin() + from, panel.dates.begin() + to);
  out.asset1.assign(panel.asset1.begin() + from, panel.asset1.begin() + to);
  out.asset2.assign(panel.asset2.begin() + from, panel.asset2.begin() + to);
  return out;
}

std::vector<est::ModelSpec> parse_specs(const std::string& families,
                                        const std::string& dynamics,
                                        const std::string& margin_mode, int p1, int p2,
                                        int max_p) {
  std::vector<est::ModelSpec> specs;
  auto split_csv = [](const std::string& s) {
    std::vector<std::string> parts;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) parts.push_back(tok);
    }
    return parts;
  };
  for (const std::string& f : split_csv(families)) {
    for (const std::string& d : split_csv(dynamics)) {
      est::ModelSpec spec;
      spec.family = cop::family_from_tag(f);
      spec.dynamics = cop::dynamics_from_tag(d);
      spec.margin_mode = est::margin_mode_from_tag(margin_mode);
      spec.p1 = p1 < 0 ? est::kAutoArOrder : static_cast<std::size_t>(p1);
      spec.p2 = p2 < 0 ? est::kAutoArOrder : static_cast<std::size_t>(p2);
      spec.max_p = static_cast<std::size_t>(max_p);
      if (spec.dynamics == cop::Dynamics::gas &&
          (spec.family == cop::Family::clayton || spec.family == cop::Family::sjc)) {
        continue;  // constant-only families
      }
      specs.push_back(spec);
    }
  }
  if (specs.empty()) throw InputError("no valid model specifications requested");
  return specs;
}

// ------------------------------------------------------------------ ingest

int cmd_ingest(const std::string& asset1, const std::string& asset2,
               const std::string& holidays, double scale, const std::string& out_path) {
  std::set<md::Date> holiday_set;
  if (!holidays.empty()) {
    std::ifstream probe(holidays);
    if (!probe) throw InputError("cannot open holiday file " + holidays);
    holiday_set = md::read_holiday_file(holidays);
  }

  auto build = [&](const std::string& path) {
    std::ifstream probe(path);
    if (!probe) throw InputError("cannot open " + path);
    probe.close();
    const auto bars = md::filter_calendar(md::read_bars_csv(path), holiday_set);
    std::vector<std::string> warnings;
    auto daily = md::build_daily(bars, &warnings);
    for (const auto& wmsg : warnings) std::cerr << "warning: " << wmsg << "\n";
    for (auto& obs : daily) {
      obs.ret *= scale;
      obs.rv = std::max(obs.rv * scale * scale, md::kRvFloor);
    }
    return daily;
  };

  const auto daily1 = build(asset1);
  const auto daily2 = build(asset2);
  const md::ReturnPanel panel = md::align_panel(daily1, daily2);

  std::ostringstream os;
  md::write_panel_csv(os, panel);
  write_text_file(out_path, os.str());

  double av1 = 0.0, av2 = 0.0;
  for (std::size_t t = 0; t < panel.size(); ++t) {
    av1 += md::annualized_vol(panel.asset1[t].rv / (scale * scale));
    av2 += md::annualized_vol(panel.asset2[t].rv / (scale * scale));
  }
  std::cout << "panel: " << panel.size() << " days, " << panel.dates.front().to_string()
            << " .. " << panel.dates.back().to_string() << "\n"
            << "mean annualized vol: asset1 " << av1 / panel.size() << "%, asset2 "
            << av2 / panel.size() << "%\n"
            << "wrote " << out_path << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- fit

int cmd_fit(const std::string& panel_path, const std::string& split_date,
            const std::string& families, const std::string& dynamics,
            const std::string& margin_mode, int p1, int p2, int max_p, std::size_t bootstrap_B,
            std::size_t block_len, std::uint64_t seed, const std::string& out_path) {
  const md::ReturnPanel full = load_panel(panel_path);
  md::ReturnPanel insample = full;
  if (!split_date.empty()) {
    insample = slice_panel(full, 0, split_index(full, split_date));
  }

  const auto specs = parse_specs(families, dynamics, margin_mode, p1, p2, max_p);

  json out;
  out["seed"] = seed;
  out["split_date"] = split_date;
  out["in_sample_days"] = insample.size();
  json models = json::array();

  for (const auto& spec : specs) {
    const std::uint64_t model_seed = derive_seed(seed, spec.tag());
    const est::JointModel model = est::msml_fit(insample, spec, model_seed);
    json doc = est::model_to_json(model, insample.dates);
    doc["tag"] = spec.tag();

    std::cout << spec.tag() << ": copula loglik " << model.copula.loglik << ", total "
              << model.loglik_total << "\n";
    const auto names = est::param_names(model);
    const auto values = est::param_vector(model);
    for (std::size_t k = 0; k < names.size(); ++k) {
      std::cout << "  " << names[k] << " = " << values[k] << "\n";
    }

    if (bootstrap_B > 0) {
      const auto boot =
          est::block_bootstrap_se(insample, spec, bootstrap_B, block_len, model_seed);
      doc["bootstrap"] = est::bootstrap_to_json(boot);
      for (std::size_t k = 0; k < boot.names.size(); ++k) {
        std::cout << "  se(" << boot.names[k] << ") = " << boot.se[k] << "\n";
      }
    }
    models.push_back(std::move(doc));
  }
  out["models"] = std::move(models);
  write_text_file(out_path, out.dump(2) + "\n");
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

std::string var_csv(const risk::RollingForecast& roll,
                    const std::vector<double>& alphas) {
  std::string text = "date,var01,var05,var10,var90,var95,var99,es05,cdb05\n";
  (void)alphas;
  for (std::size_t i = 0; i < roll.dates.size(); ++i) {
    text += roll.dates[i].to_string();
    for (double a : {0.01, 0.05, 0.10, 0.90, 0.95, 0.99}) {
      text += "," + fmt(roll.var_by_alpha.at(a)[i]);
    }
    text += "," + fmt(roll.es05[i]);
    text += "," + fmt(roll.cdb05[i]);
    text += "\n";
  }
  return text;
}

int cmd_evaluate(const std::string& panel_path, const std::string& fits_path,
                 const std::string& split_date, const std::string& benchmark,
                 std::vector<double> alphas, std::size_t S, std::uint64_t seed,
                 const std::string& out_path, const std::string& csv_dir) {
  const md::ReturnPanel full = load_panel(panel_path);
  const std::size_t from = split_index(full, split_date);
  const json fits = load_json(fits_path);

  // required quantile set for the summary table
  for (double a : {0.01, 0.05, 0.10, 0.90, 0.95, 0.99}) {
    if (std::find(alphas.begin(), alphas.end(), a) == alphas.end()) alphas.push_back(a);
  }
  std::sort(alphas.begin(), alphas.end());

  struct Entry {
    std::string tag;
    est::JointModel model;
    risk::RollingForecast roll;
  };
  std::vector<Entry> entries;
  for (const json& doc : fits.at("models")) {
    Entry e;
    e.tag = doc.at("tag").get<std::string>();
    e.model = est::model_from_json(doc, full);
    if (from <= e.model.offset + 1) {
      throw InputError("out-of-sample window starts before the filter warm-up");
    }
    e.roll = risk::rolling_forecast(e.model, full, from, alphas, S,
                                    derive_seed(seed, "evaluate:" + e.tag));
    entries.push_back(std::move(e));
  }

  int bench_idx = 0;
  if (!benchmark.empty()) {
    bench_idx = -1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].tag == benchmark) bench_idx = static_cast<int>(i);
    }
    if (bench_idx < 0) throw InputError("benchmark model not found: " + benchmark);
  }

  json out;
  out["split_date"] = split_date;
  out["oos_days"] = full.size() - from;
  out["benchmark"] = entries[static_cast<std::size_t>(bench_idx)].tag;
  out["seed"] = seed;

  // out-of-sample log-likelihoods
  json models = json::array();
  for (const auto& e : entries) {
    double cop_ll = 0.0, mar_ll = 0.0;
    for (double v : e.roll.copula_logscore) cop_ll += v;
    for (double v : e.roll.margin_logscore) mar_ll += v;
    json m;
    m["tag"] = e.tag;
    m["oos_copula_loglik"] = cop_ll;
    m["oos_margin_loglik"] = mar_ll;
    m["oos_total_loglik"] = cop_ll + mar_ll;
    models.push_back(std::move(m));
  }
  out["models"] = std::move(models);

  // pairwise CPA on the copula log scores
  json cpa = json::array();
  for (const auto& a : entries) {
    json row = json::array();
    for (const auto& b : entries) {
      const auto rep = stats::cpa_test(a.roll.copula_logscore, b.roll.copula_logscore);
      row.push_back({{"statistic", rep.statistic}, {"p_value", rep.p_value}});
    }
    cpa.push_back(std::move(row));
  }
  out["cpa_matrix"] = std::move(cpa);

  // VaR evaluation table per model and alpha
  const auto& bench = entries[static_cast<std::size_t>(bench_idx)];
  json table = json::array();
  for (const auto& e : entries) {
    json rows = json::array();
    for (double a : alphas) {
      const auto& q = e.roll.var_by_alpha.at(a);
      const auto hits = stats::make_hits(e.roll.realized, q, a);
      const auto dq = stats::dq_test(hits, 4, 1000, derive_seed(seed, "dq:" + e.tag,
                                     static_cast<std::uint64_t>(a * 1e6)));
      std::vector<double> losses(q.size()), bench_losses(q.size());
      for (std::size_t i = 0; i < q.size(); ++i) {
        losses[i] = stats::gk_loss(e.roll.realized[i], q[i], a);
        bench_losses[i] =
            stats::gk_loss(bench.roll.realized[i], bench.roll.var_by_alpha.at(a)[i], a);
      }
      double mean_loss = 0.0;
      for (double v : losses) mean_loss += v;
      mean_loss /= static_cast<double>(losses.size());

      json row;
      row["alpha"] = a;
      row["coverage"] = dq.details.at("coverage");
      row["gk_loss"] = mean_loss;
      row["dq_statistic"] = dq.statistic;
      row["dq_p_value"] = dq.p_value;
      row["dq_degenerate"] = dq.degenerate;
      if (&e != &bench) {
        const auto dm = stats::dm_test(bench_losses, losses);
        row["dm_statistic"] = dm.statistic;
        row["dm_p_value"] = dm.p_value;
      }
      rows.push_back(std::move(row));
    }
    table.push_back({{"tag", e.tag}, {"rows", std::move(rows)}});
  }
  out["var_table"] = std::move(table);

  if (!csv_dir.empty()) {
    for (const auto& e : entries) {
      write_text_file(csv_dir + "/" + e.tag + "_forecast.csv", var_csv(e.roll, alphas));
    }
  }

  write_text_file(out_path, out.dump(2) + "\n");

  // console table mirroring the evaluation layout
  for (const auto& m : out["var_table"]) {
    std::cout << m["tag"].get<std::string>() << "\n";
    std::cout << "  alpha    coverage   gk_loss      DQ     p-val\n";
    for (const auto& row : m["rows"]) {
      std::printf("  %5.2f   %8.3f  %8.4f  %6.2f  %6.3f\n", row["alpha"].get<double>(),
                  row["coverage"].get<double>(), row["gk_loss"].get<double>(),
                  row["dq_statistic"].get<double>(), row["dq_p_value"].get<double>());
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- cdb

int cmd_cdb(const std::string& panel_path, const std::string& fits_path,
            const std::string& model_tag, const std::string& split_date, double alpha,
            std::size_t S, std::size_t n_boot, std::uint64_t seed,
            const std::string& out_csv, const std::string& out_band) {
  const md::ReturnPanel full = load_panel(panel_path);
  const std::size_t from = split_index(full, split_date);
  const json fits = load_json(fits_path);

  const json* doc = nullptr;
  for (const json& d : fits.at("models")) {
    if (model_tag.empty() || d.at("tag").get<std::string>() == model_tag) {
      doc = &d;
      break;
    }
  }
  if (!doc) throw InputError("model not found in fits: " + model_tag);

  const est::JointModel model = est::model_from_json(*doc, full);
  const auto path =
      risk::cdb_path(model, full, from, alpha, S, derive_seed(seed, "cdb_path"));

  std::string csv = "date,cdb,es_port,es_upper,es_lower\n";
  std::size_t clipped = 0, invalid = 0;
  for (const auto& pt : path) {
    csv += pt.date.to_string() + "," + (pt.valid ? fmt(pt.cdb) : "nan") + "," +
           fmt(pt.es_port) + "," + fmt(pt.es_upper) + "," + fmt(pt.es_lower) + "\n";
    clipped += pt.clipped ? 1 : 0;
    invalid += pt.valid ? 0 : 1;
  }
  write_text_file(out_csv, csv);

  // constant-benefit band at the model's unconditional dependence
  double rho_bar;
  if (model.spec.dynamics == cop::Dynamics::gas) {
    const auto& gp = model.copula.gas.params;
    rho_bar = cop::transform(model.spec.family, gp.w / (1.0 - gp.b));
  } else {
    rho_bar = model.copula.constant.delta;
  }
  if (model.spec.family != cop::Family::normal &&
      model.spec.family != cop::Family::student_t) {
    // map through Kendall tau to a Gaussian equivalent
    double tau = 0.0;
    if (model.spec.family == cop::Family::rotated_gumbel) {
      tau = 1.0 - 1.0 / rho_bar;
    } else if (model.spec.family == cop::Family::clayton) {
      tau = rho_bar / (rho_bar + 2.0);
    } else {
      throw InputError("cdb band unsupported for this copula family");
    }
    rho_bar = std::sin(0.5 * std::numbers::pi * tau);
  }
  const auto band = risk::cdb_constant_band(rho_bar, full.size() - from, alpha, n_boot,
                                            derive_seed(seed, "cdb_band"));

  json bj;
  bj["alpha"] = alpha;
  bj["unconditional_rho"] = rho_bar;
  bj["n_sim"] = n_boot;
  bj["mean"] = band.mean;
  bj["lo90"] = band.lo90;
  bj["hi90"] = band.hi90;
  bj["clipped_dates"] = clipped;
  bj["invalid_dates"] = invalid;
  bj["n_dates"] = path.size();
  write_text_file(out_band, bj.dump(2) + "\n");

  std::cout << "cdb path: " << path.size() << " dates, " << clipped << " clipped\n"
            << "constant band: [" << band.lo90 << ", " << band.hi90 << "], mean "
            << band.mean << "\n"
            << "wrote " << out_csv << " and " << out_band << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& dgp_path, std::size_t T, std::size_t burnin,
                 std::uint64_t seed, const std::string& out_path,
                 const std::string& write_dgp) {
  if (!write_dgp.empty()) {
    write_text_file(write_dgp, sim::dgp_to_json(sim::example_dgp()).dump(2) + "\n");
    std::cout << "wrote " << write_dgp << "\n";
    if (out_path.empty()) return kExitOk;
  }
  const sim::JointDgp dgp =
      dgp_path.empty() ? sim::example_dgp() : sim::dgp_from_json(load_json(dgp_path));
  const auto data = sim::simulate_joint(dgp, T, seed, burnin);
  std::ostringstream os;
  md::write_panel_csv(os, data.panel);
  write_text_file(out_path, os.str());
  std::cout << "simulated " << data.panel.size() << " days, wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic-copula realized-GARCH risk toolkit"};
  app.set_config("--config", "", "TOML-style config file; flags override its values");
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build a return/RV panel from intraday bars");
  std::string in_a1, in_a2, in_hol, in_out = "panel.csv";
  double in_scale = 100.0;
  ingest->add_option("--asset1", in_a1, "intraday CSV (timestamp,price)")->required();
  ingest->add_option("--asset2", in_a2, "intraday CSV (timestamp,price)")->required();
  ingest->add_option("--holidays", in_hol, "holiday list, one ISO date per line");
  ingest->add_option("--scale", in_scale, "return scale factor (100 = percent)");
  ingest->add_option("--out", in_out, "output panel CSV");

  // fit
  auto* fit = app.add_subcommand("fit", "estimate margins and copulas (two-step MSML)");
  std::string f_panel, f_split, f_fam = "normal", f_dyn = "constant,gas",
              f_mode = "parametric", f_out = "fits.json";
  int f_p1 = -1, f_p2 = -1, f_maxp = 5;
  std::size_t f_boot = 0, f_block = 0;
  std::uint64_t f_seed = 1;
  fit->add_option("--panel", f_panel, "panel CSV from ingest or simulate")->required();
  fit->add_option("--split-date", f_split, "last in-sample date (fit window end)");
  fit->add_option("--family", f_fam, "comma list: normal,student_t,clayton,rotated_gumbel,sjc");
  fit->add_option("--dynamics", f_dyn, "comma list: constant,gas");
  fit->add_option("--margin-mode", f_mode, "parametric | semiparametric");
  fit->add_option("--p1", f_p1, "AR order asset 1 (-1 = select by BIC)");
  fit->add_option("--p2", f_p2, "AR order asset 2 (-1 = select by BIC)");
  fit->add_option("--max-p", f_maxp, "maximum AR order for selection");
  fit->add_option("--bootstrap", f_boot, "block-bootstrap replicates for SEs (0 = off)");
  fit->add_option("--block-len", f_block, "bootstrap mean block length (0 = T^(1/3))");
  fit->add_option("--seed", f_seed, "root seed");
  fit->add_option("--out", f_out, "output JSON");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "out-of-sample VaR and model comparison");
  std::string e_panel, e_fits, e_split, e_bench, e_out = "evaluation.json", e_csvdir;
  std::vector<double> e_alphas;
  std::size_t e_S = 5000;
  std::uint64_t e_seed = 1;
  ev->add_option("--panel", e_panel, "full panel CSV")->required();
  ev->add_option("--fits", e_fits, "fit JSON from the fit command")->required();
  ev->add_option("--split-date", e_split, "in-sample end date")->required();
  ev->add_option("--benchmark", e_bench, "benchmark model tag (default: first)");
  ev->add_option("--alpha", e_alphas, "extra quantile levels");
  ev->add_option("--S", e_S, "Monte-Carlo draws per forecast date");
  ev->add_option("--seed", e_seed, "root seed");
  ev->add_option("--out", e_out, "output JSON");
  ev->add_option("--csv-dir", e_csvdir, "directory for per-model forecast CSVs");

  // cdb
  auto* cdb = app.add_subcommand("cdb", "conditional diversification benefit path + band");
  std::string c_panel, c_fits, c_tag, c_split, c_csv = "cdb.csv", c_band = "cdb_band.json";
  double c_alpha = 0.05;
  std::size_t c_S = 5000, c_boot = 10000;
  std::uint64_t c_seed = 1;
  cdb->add_option("--panel", c_panel, "full panel CSV")->required();
  cdb->add_option("--fits", c_fits, "fit JSON")->required();
  cdb->add_option("--model", c_tag, "model tag (default: first in file)");
  cdb->add_option("--split-date", c_split, "in-sample end date")->required();
  cdb->add_option("--alpha", c_alpha, "tail probability level");
  cdb->add_option("--S", c_S, "Monte-Carlo draws per date");
  cdb->add_option("--n-boot", c_boot, "band simulations");
  cdb->add_option("--seed", c_seed, "root seed");
  cdb->add_option("--out-csv", c_csv, "CDB path CSV");
  cdb->add_option("--out-band", c_band, "band JSON");

  // simulate
  auto* simc = app.add_subcommand("simulate", "generate a panel from a configured DGP");
  std::string s_dgp, s_out = "sim_panel.csv", s_write;
  std::size_t s_T = 2000, s_burn = 500;
  std::uint64_t s_seed = 1;
  simc->add_option("--dgp", s_dgp, "DGP JSON (default: built-in example)");
  simc->add_option("--T", s_T, "days to keep");
  simc->add_option("--burnin", s_burn, "days to discard");
  simc->add_option("--seed", s_seed, "root seed");
  simc->add_option("--out", s_out, "output panel CSV");
  simc->add_option("--write-default-dgp", s_write, "write the example DGP JSON and exit");

  CLI11_PARSE(app, argc, argv);
  set_max_threads(threads);

  try {
    if (*ingest) return cmd_ingest(in_a1, in_a2, in_hol, in_scale, in_out);
    if (*fit) {
      return cmd_fit(f_panel, f_split, f_fam, f_dyn, f_mode, f_p1, f_p2, f_maxp, f_boot,
                     f_block, f_seed, f_out);
    }
    if (*ev) {
      return cmd_evaluate(e_panel, e_fits, e_split, e_bench, e_alphas, e_S, e_seed, e_out,
                          e_csvdir);
    }
    if (*cdb) {
      return cmd_cdb(c_panel, c_fits, c_tag, c_split, c_alpha, c_S, c_boot, c_seed, c_csv,
                     c_band);
    }
    if (*simc) return cmd_simulate(s_dgp, s_T, s_burn, s_seed, s_out, s_write);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const margins::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what()
              << " (grad norm " << e.grad_inf_norm << ")\n";
    return kExitConvergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
