// mc2a: workloads, reference chains, compiler, simulator and roofline tools.
//
// Every subcommand takes an optional key=value manifest (-m). A value given on
// the command line wins over the manifest, which wins over the built-in
// default. Workload and grid paths in a manifest are relative to the manifest.
// Outputs go to --out, else $MC2A_OUT_DIR, else the current directory.

#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mc2a/assembler.hpp"
#include "mc2a/compiler.hpp"
#include "mc2a/error.hpp"
#include "mc2a/mcmc.hpp"
#include "mc2a/model_io.hpp"
#include "mc2a/reports.hpp"
#include "mc2a/roofline.hpp"
#include "mc2a/samplers.hpp"
#include "mc2a/sim.hpp"
#include "mc2a/workloads.hpp"

namespace fs = std::filesystem;
using namespace mc2a;

namespace {

// ----- Manifest ---------------------------------------------------------------

using Manifest = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path);
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(path, lineno, "empty key");
    if (m.count(key)) throw ParseError(path, lineno, "duplicate key '" + key + "'");
    m[key] = trim(line.substr(eq + 1));
  }
  return m;
}

// String-valued settings bound to CLI options. resolve() fills every option
// that was not given on the command line from the manifest.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {
    app_->add_option("-m,--manifest", manifest_path_, "key = value manifest file");
  }

  void add(const std::string& key, const std::string& flags, std::string def, const std::string& help) {
    auto& e = entries_.emplace_back(Entry{key, std::move(def), nullptr});
    e.opt = app_->add_option(flags, e.value, help + " [" + key + "]");
    if (!e.value.empty()) e.opt->default_str(e.value);
  }

  void resolve() {
    if (manifest_path_.empty()) return;
    const Manifest m = read_manifest(manifest_path_);
    const fs::path base = fs::path(manifest_path_).parent_path();
    for (const auto& [k, v] : m) {
      Entry* e = find(k);
      if (!e) throw InputError(manifest_path_ + ": unknown key '" + k + "'");
      if (e->opt->count() != 0) continue;
      const bool is_path = k == "workload" || k == "grid";
      if (is_path && !v.empty() && v.rfind("builtin:", 0) != 0 && fs::path(v).is_relative()) {
        e->value = (base / v).lexically_normal().string();
      } else {
        e->value = v;
      }
    }
  }

  const std::string& str(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.key == key) return e.value;
    }
    throw InternalCheckError("undeclared parameter " + key);
  }

  std::uint64_t u64(const std::string& key) const {
    const auto& s = str(key);
    try {
      std::size_t used = 0;
      if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
      const auto v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError(key + ": expected a non-negative integer, got '" + s + "'");
  }

  int i32(const std::string& key) const {
    const auto v = u64(key);
    if (v > 0x7fffffff) throw InputError(key + ": value out of range");
    return static_cast<int>(v);
  }

  double real(const std::string& key) const {
    const auto& s = str(key);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError(key + ": expected a number, got '" + s + "'");
  }

  bool flag(const std::string& key) const {
    const auto& s = str(key);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s.empty() || s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw InputError(key + ": expected true/false, got '" + s + "'");
  }

 private:
  struct Entry {
    std::string key;
    std::string value;
    CLI::Option* opt;
  };
  Entry* find(const std::string& key) {
    for (auto& e : entries_) {
      if (e.key == key) return &e;
    }
    return nullptr;
  }

  CLI::App* app_;
  std::string manifest_path_;
  std::deque<Entry> entries_;
};

// ----- Shared settings --------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> int_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split(s, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used == item.size()) {
        out.push_back(v);
        continue;
      }
    } catch (const std::exception&) {
    }
    throw InputError(key + ": expected a comma-separated integer list, got '" + s + "'");
  }
  return out;
}

// "T,K,S,M,B", or the names "default" / "toy".
HwConfig parse_hw(const std::string& s) {
  if (s == "default") return HwConfig::standard();
  if (s == "toy") return HwConfig::toy();
  const auto v = int_list("hw", s);
  if (v.size() != 5) throw InputError("hw: expected T,K,S,M,B, got '" + s + "'");
  HwConfig hw;
  hw.T = v[0];
  hw.K = v[1];
  hw.S = v[2];
  hw.M = v[3];
  hw.B = v[4];
  hw.validate();
  return hw;
}

GraphModel load_workload(const std::string& spec) {
  if (spec.empty()) throw InputError("no workload given (path or builtin:<name>)");
  if (spec.rfind("builtin:", 0) == 0) return builtin_workload(spec.substr(8));
  if (!fs::exists(spec)) throw InputError("workload file not found: " + spec);
  return load_model(spec);
}

std::string workload_label(const std::string& spec) {
  if (spec.rfind("builtin:", 0) == 0) return spec.substr(8);
  return fs::path(spec).stem().string();
}

fs::path out_dir(const Params& p) {
  std::string dir = p.str("out");
  if (dir.empty()) {
    const char* env = std::getenv("MC2A_OUT_DIR");
    dir = env && *env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  return os;
}

bool wants(const Params& p, const std::string& format) {
  for (const auto& f : split(p.str("formats"), ',')) {
    if (f == format) return true;
  }
  return false;
}

void add_chain_params(Params& p) {
  p.add("workload", "-w,--workload", "", "model file or builtin:<name>");
  p.add("algorithm", "-a,--algorithm", "gibbs", "mh, gibbs, block-gibbs, async-gibbs or pas");
  p.add("steps", "-n,--steps", "1000", "MCMC steps");
  p.add("burn_in", "--burn-in", "0", "steps excluded from histograms");
  p.add("seed", "-s,--seed", "1", "root seed of every random stream");
  p.add("pas_L", "-L,--pas-L", "1", "PAS path length");
  p.add("sampler", "--sampler", "gumbel", "gumbel or cdf");
  p.add("beta", "--beta", "1", "inverse temperature (start of the schedule)");
  p.add("beta_end", "--beta-end", "", "final inverse temperature of a geometric schedule");
  p.add("frac_bits", "--frac-bits", "8", "fixed-point fraction bits of the energies");
  p.add("out", "-o,--out", "", "output directory (default $MC2A_OUT_DIR or .)");
}

AnnealSchedule schedule(const Params& p) {
  const double b0 = p.real("beta");
  if (p.str("beta_end").empty()) return AnnealSchedule::constant(b0);
  return AnnealSchedule::geometric(b0, p.real("beta_end"), std::max<std::uint64_t>(1, p.u64("steps")));
}

ChainConfig chain_config(const Params& p) {
  ChainConfig c;
  c.algorithm = parse_algorithm(p.str("algorithm"));
  c.num_steps = p.u64("steps");
  c.burn_in = p.u64("burn_in");
  c.seed = p.u64("seed");
  c.pas_L = p.i32("pas_L");
  c.sampler = parse_sampler(p.str("sampler"));
  c.anneal = schedule(p);
  return c;
}

CompileOptions compile_options(const Params& p) {
  CompileOptions o;
  const auto steps = p.u64("steps");
  if (steps == 0 || steps > 0xffffffffu) throw InputError("steps: the hardware loop needs 1..2^32-1 iterations");
  o.num_steps = static_cast<std::uint32_t>(steps);
  o.anneal = schedule(p);
  o.frac_bits = p.i32("frac_bits");
  o.pas_L = p.i32("pas_L");
  o.sampler = parse_sampler(p.str("sampler"));
  return o;
}

// ----- Subcommands ------------------------------------------------------------

void run_ref(const Params& p) {
  const GraphModel model = load_workload(p.str("workload"));
  ChainConfig cfg = chain_config(p);
  cfg.trace_stride = p.u64("trace_stride");
  cfg.record_states = p.flag("record_states");
  ChainResult result;
  if (cfg.num_steps > 0) {
    result = run_chain(model, cfg);
  } else {
    cfg.validate(model);
    result.final_state = model.zero_state();
    result.best_state = result.final_state;
    result.best_energy = energy_full(model, result.final_state);
    for (RvId i = 0; i < model.num_rvs(); ++i) result.histograms.emplace_back(model.cardinality(i), 0);
  }
  const fs::path dir = out_dir(p);
  if (wants(p, "json")) open_out(dir / "chain.json") << chain_report_json(model, cfg, result) << '\n';
  if (wants(p, "csv")) {
    auto os = open_out(dir / "trace.csv");
    write_trace_csv(os, result);
  }
  if (cfg.record_states) {
    auto os = open_out(dir / "states.csv");
    write_states_csv(os, result.states);
  }
  std::cout << "best_energy " << result.best_energy << "  accepted " << result.accepted << "/" << result.proposals
            << "  -> " << dir.string() << '\n';
}

Program compile_from(const Params& p, const GraphModel& model) {
  const int frac = p.i32("frac_bits");
  return compile(quantize_energies(model, frac), parse_algorithm(p.str("algorithm")), parse_hw(p.str("hw")),
                 compile_options(p));
}

void run_compile(const Params& p) {
  const Program prog = compile_from(p, load_workload(p.str("workload")));
  const fs::path dir = out_dir(p);
  const std::string stem = p.str("name").empty() ? workload_label(p.str("workload")) : p.str("name");
  {
    std::ofstream os(dir / (stem + ".bin"), std::ios::binary);
    if (!os) throw InputError("cannot write " + (dir / (stem + ".bin")).string());
    write_program_binary(os, prog.hw, prog.code);
  }
  open_out(dir / (stem + ".s")) << disassemble_program(prog.hw, prog.code);
  {
    auto os = open_out(dir / (stem + ".mem"));
    write_memory_image(os, prog.memory);
  }
  std::cout << prog.code.size() << " instructions";
  for (const auto& ph : prog.phases) std::cout << "\n  " << ph.name << ": " << ph.end - ph.begin;
  std::cout << "\n-> " << (dir / stem).string() << ".{bin,s,mem}\n";
}

void run_asm(const std::string& input, const std::string& output) {
  std::ifstream in(input);
  if (!in) throw InputError("cannot open " + input);
  HwConfig hw;
  const auto code = assemble_program(in, hw, input);
  const std::string dst = output.empty() ? fs::path(input).replace_extension(".bin").string() : output;
  std::ofstream os(dst, std::ios::binary);
  if (!os) throw InputError("cannot write " + dst);
  write_program_binary(os, hw, code);
  std::cout << code.size() << " instructions -> " << dst << '\n';
}

void run_disasm(const std::string& input, const std::string& output) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw InputError("cannot open " + input);
  HwConfig hw;
  const auto code = read_program_binary(in, hw);
  const std::string text = disassemble_program(hw, code);
  if (output.empty()) {
    std::cout << text;
  } else {
    open_out(output) << text;
  }
}

// "auto": PAS index draws are spatial, Gibbs draws temporal.
SuMode su_mode(const std::string& s, Algorithm alg) {
  if (s == "auto") return alg == Algorithm::kPas ? SuMode::kSpatial : SuMode::kTemporal;
  if (s == "temporal") return SuMode::kTemporal;
  if (s == "spatial") return SuMode::kSpatial;
  throw InputError("su_mode: expected auto, temporal or spatial, got '" + s + "'");
}

void run_simulate(const Params& p) {
  const GraphModel model = quantize_energies(load_workload(p.str("workload")), p.i32("frac_bits"));
  const Algorithm alg = parse_algorithm(p.str("algorithm"));
  const Program prog = compile_from(p, model);

  const auto problems = check_structural(prog);
  if (!problems.empty()) {
    std::string msg = "structural check failed with " + std::to_string(problems.size()) + " problem(s)";
    for (std::size_t i = 0; i < problems.size() && i < 5; ++i) {
      msg += "\n  cycle " + std::to_string(problems[i].cycle) + " pc " + std::to_string(problems[i].pc) + ": " +
             problems[i].what;
    }
    throw InternalCheckError(msg);
  }

  const std::string mode = p.str("mode");
  if (mode != "sim" && mode != "both") throw InputError("mode: expected sim or both, got '" + mode + "'");

  SimOptions so;
  so.seed = p.u64("seed");
  so.burn_in = p.u64("burn_in");
  so.cdt_capacity = p.i32("cdt_capacity");
  so.record_states = p.flag("record_states") || mode == "both";
  std::optional<GumbelLut> lut;
  if (p.u64("lut_size") > 0) {
    lut.emplace(p.i32("lut_size"), p.i32("lut_precision"));
    so.lut = &*lut;
  }
  const fs::path dir = out_dir(p);
  std::ofstream trace;
  if (p.flag("trace")) {
    trace = open_out(dir / "pipeline.csv");
    so.trace = &trace;
  }
  const SimResult result = simulate(prog, so);

  const auto profile = profile_workload(model, alg, su_mode(p.str("su_mode"), alg), prog.pas_L > 0 ? prog.pas_L : 1);
  const RooflinePoint predicted = achievable_tp(prog.hw, profile);
  if (wants(p, "json")) open_out(dir / "sim.json") << sim_report_json(prog, result, predicted) << '\n';
  if (so.record_states) {
    auto os = open_out(dir / "states.csv");
    write_states_csv(os, result.states);
  }

  const double tp = result.stats.throughput(prog.hw);
  std::cout << result.stats.cycles << " cycles, " << result.stats.samples << " samples, TP " << tp * 1e-9
            << " GS/s (roofline " << predicted.tp * 1e-9 << ", " << to_string(predicted.bottleneck) << ")\n";

  if (mode == "both") {
    if (so.lut) throw InputError("mode both compares exact-noise runs; drop lut_size");
    ChainConfig cfg = chain_config(p);
    cfg.record_states = true;
    const ChainResult ref = run_chain(model, cfg);
    if (ref.states.size() != result.states.size()) {
      throw InternalCheckError("reference recorded " + std::to_string(ref.states.size()) + " states, simulator " +
                               std::to_string(result.states.size()));
    }
    for (std::size_t t = 0; t < ref.states.size(); ++t) {
      if (ref.states[t] != result.states[t]) {
        throw InternalCheckError("simulator diverges from the reference chain at step " + std::to_string(t));
      }
    }
    std::cout << "reference match: " << ref.states.size() << " states identical\n";
  }
}

std::vector<HwConfig> hw_list(const std::string& s) {
  std::vector<HwConfig> out;
  for (const auto& item : split(s, ';')) out.push_back(parse_hw(item));
  if (out.empty()) throw InputError("hw: empty configuration list");
  return out;
}

// "eval" expands to the evaluation workload stand-ins; anything else is a
// workload spec profiled with the chosen algorithm.
std::vector<WorkloadProfile> profiles(const Params& p) {
  std::vector<WorkloadProfile> out;
  for (const auto& spec : split(p.str("workloads"), ';')) {
    if (spec == "eval") {
      for (auto& w : evaluation_profiles(p.i32("pas_L"))) out.push_back(std::move(w));
      continue;
    }
    auto prof = profile_workload(load_workload(spec), parse_algorithm(p.str("algorithm")),
                                 su_mode(p.str("su_mode"), parse_algorithm(p.str("algorithm"))),
                                 p.i32("pas_L"));
    prof.name = workload_label(spec);
    out.push_back(std::move(prof));
  }
  if (out.empty()) throw InputError("workloads: nothing to evaluate");
  return out;
}

void run_roofline(const Params& p) {
  const auto profs = profiles(p);
  std::vector<RooflineRow> rows;
  for (const auto& hw : hw_list(p.str("hw"))) {
    for (const auto& w : profs) rows.push_back({w.name, hw, achievable_tp(hw, w)});
  }
  const fs::path dir = out_dir(p);
  auto os = open_out(dir / "roofline.csv");
  write_roofline_csv(os, rows);
  write_roofline_csv(std::cout, rows);
}

std::vector<HwConfig> read_grid(const std::string& path) {
  if (path.empty()) return default_dse_grid();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grid " + path);
  std::vector<HwConfig> grid;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    HwConfig hw;
    std::string extra;
    if (!(ls >> hw.T >> hw.K >> hw.S >> hw.M >> hw.B) || (ls >> extra)) {
      throw ParseError(path, lineno, "expected 'T K S M B'");
    }
    try {
      hw.validate();
    } catch (const InputError& e) {
      throw ParseError(path, lineno, e.what());
    }
    grid.push_back(hw);
  }
  if (grid.empty()) throw InputError("empty DSE grid " + path);
  return grid;
}

void run_dse(const Params& p) {
  const auto report = dse(read_grid(p.str("grid")), profiles(p));
  const fs::path dir = out_dir(p);
  {
    auto os = open_out(dir / "dse.csv");
    write_dse_csv(os, report);
  }
  open_out(dir / "dse.json") << dse_report_json(report, memory_sizing(parse_hw(p.str("hw")))) << '\n';
  std::cout << report.entries.size() << " configurations, " << report.feasible << " feasible; frontier:\n";
  for (const auto& e : report.entries) {
    if (e.frontier) std::cout << "  " << e.hw.to_string() << "  min_tp " << e.min_tp * 1e-9 << " GS/s\n";
  }
}

void run_compare_samplers(const Params& p) {
  const auto sizes = int_list("sizes", p.str("sizes"));
  const auto lut_sizes = int_list("lut_sizes", p.str("lut_sizes"));
  const auto precisions = int_list("precisions", p.str("precisions"));
  const auto trials = p.u64("trials");
  const auto draws = p.u64("draws");
  const auto seed = p.u64("seed");
  const double spread = p.real("spread");
  const int capacity = p.i32("cdt_capacity");
  if (trials == 0) throw InputError("trials must be positive");

  // Mean TV over `trials` random distributions of size n; distribution k uses
  // logits seeded with seed + k and draws seeded with seed + trials + k.
  auto mean_tv = [&](int n, NoiseKind kind, const GumbelLut* lut) {
    double sum = 0.0;
    for (std::uint64_t k = 0; k < trials; ++k) {
      const auto logits = random_logits(static_cast<std::size_t>(n), spread, seed + k);
      const auto emp = empirical_distribution(logits, draws, seed + trials + k, kind, lut);
      sum += total_variation(emp, softmax(logits));
    }
    return sum / static_cast<double>(trials);
  };

  std::vector<SamplerRow> rows;
  for (int n : sizes) {
    if (n < 1 || n > kMaxCardinality) throw InputError("sizes: distribution sizes must be in [1, 256]");
    const double gumbel_cps = sampler_microbench(n, false).cycles_per_sample;
    double cdf_cps = std::nan("");
    try {
      cdf_cps = sampler_microbench(n, true, 64, capacity).cycles_per_sample;
    } catch (const CapacityError&) {
    }
    rows.push_back({"exact", 0, 0, n, mean_tv(n, NoiseKind::kExact, nullptr), gumbel_cps});
    rows.push_back({"cdf", 0, 0, n, mean_tv(n, NoiseKind::kCdf, nullptr), cdf_cps});
    for (int ls : lut_sizes) {
      for (int pr : precisions) {
        const GumbelLut lut(ls, pr);
        rows.push_back({"lut", ls, pr, n, mean_tv(n, NoiseKind::kLut, &lut), gumbel_cps});
      }
    }
  }
  const fs::path dir = out_dir(p);
  auto os = open_out(dir / "samplers.csv");
  write_sampler_csv(os, rows);
  write_sampler_csv(std::cout, rows);
}

void run_dump_lut(int size, int precision, const std::string& output) {
  const GumbelLut lut(size, precision);
  if (output.empty()) {
    lut.dump(std::cout);
  } else {
    auto os = open_out(output);
    lut.dump(os);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MC2A toolchain: reference MCMC, compiler, cycle-level simulator, roofline and DSE"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 ok, 2 usage, 3 bad input, 4 capacity exceeded, 5 internal check failed.\n"
      "Builtin workloads: builtin:chain, builtin:earthquake, builtin:survey, builtin:maxcut16,\n"
      "  builtin:ising<R>x<C>, builtin:ring<N>, builtin:rbm<V>x<H>, builtin:dist<N>.");

  auto* ref = app.add_subcommand("run-ref", "run a reference chain; writes chain.json and trace.csv");
  Params ref_p(ref);
  add_chain_params(ref_p);
  ref_p.add("trace_stride", "--trace-stride", "1", "record the energy every N steps (0 = off)");
  ref_p.add("record_states", "--record-states", "false", "write every state to states.csv");
  ref_p.add("formats", "--formats", "json,csv", "report formats");

  auto* cmp = app.add_subcommand("compile", "compile a workload; writes <name>.bin, .s and .mem");
  Params cmp_p(cmp);
  add_chain_params(cmp_p);
  cmp_p.add("hw", "--hw", "default", "T,K,S,M,B or default/toy");
  cmp_p.add("name", "--name", "", "output file stem (default: workload name)");

  std::string asm_in, asm_out;
  auto* as = app.add_subcommand("asm", "assemble text into a binary program");
  as->add_option("input", asm_in, "assembly file")->required();
  as->add_option("-o,--output", asm_out, "binary output (default: input with .bin)");

  std::string dis_in, dis_out;
  auto* dis = app.add_subcommand("disasm", "disassemble a binary program");
  dis->add_option("input", dis_in, "binary program")->required();
  dis->add_option("-o,--output", dis_out, "text output (default: stdout)");

  auto* sim = app.add_subcommand("simulate", "compile, check and simulate; writes sim.json");
  Params sim_p(sim);
  add_chain_params(sim_p);
  sim_p.add("hw", "--hw", "default", "T,K,S,M,B or default/toy");
  sim_p.add("mode", "--mode", "sim", "sim, or both to compare against the reference chain");
  sim_p.add("lut_size", "--lut-size", "0", "Gumbel LUT entries (0 = exact noise)");
  sim_p.add("lut_precision", "--lut-precision", "8", "Gumbel LUT fraction bits");
  sim_p.add("cdt_capacity", "--cdt-capacity", "128", "entries of the CDF sampler table");
  sim_p.add("su_mode", "--su-mode", "auto", "SU mode of the roofline prediction: auto, temporal or spatial");
  sim_p.add("record_states", "--record-states", "false", "write every state to states.csv");
  sim_p.add("trace", "--trace", "false", "write pipeline.csv, one row per issue cycle");
  sim_p.add("formats", "--formats", "json", "report formats");

  auto* roof = app.add_subcommand("roofline", "roofline points; writes roofline.csv");
  Params roof_p(roof);
  roof_p.add("workloads", "-w,--workloads", "eval", "';'-separated workload specs or eval");
  roof_p.add("algorithm", "-a,--algorithm", "gibbs", "algorithm for workload specs");
  roof_p.add("pas_L", "-L,--pas-L", "1", "PAS path length");
  roof_p.add("su_mode", "--su-mode", "auto", "auto, temporal or spatial");
  roof_p.add("hw", "--hw", "default", "';'-separated T,K,S,M,B configurations");
  roof_p.add("out", "-o,--out", "", "output directory");

  auto* dse_cmd = app.add_subcommand("dse", "grid design-space exploration; writes dse.csv and dse.json");
  Params dse_p(dse_cmd);
  dse_p.add("workloads", "-w,--workloads", "eval", "';'-separated workload specs or eval");
  dse_p.add("algorithm", "-a,--algorithm", "gibbs", "algorithm for workload specs");
  dse_p.add("pas_L", "-L,--pas-L", "1", "PAS path length");
  dse_p.add("su_mode", "--su-mode", "auto", "auto, temporal or spatial");
  dse_p.add("grid", "--grid", "", "grid file of 'T K S M B' rows (default grid if empty)");
  dse_p.add("hw", "--hw", "default", "configuration whose memory sizing is reported");
  dse_p.add("out", "-o,--out", "", "output directory");

  auto* cs = app.add_subcommand("compare-samplers", "TV and cycles/sample of exact, LUT and CDF sampling");
  Params cs_p(cs);
  cs_p.add("sizes", "--sizes", "16,64,256", "distribution sizes");
  cs_p.add("trials", "--trials", "10", "random distributions per size");
  cs_p.add("draws", "--draws", "100000", "samples per distribution");
  cs_p.add("seed", "-s,--seed", "1", "root seed");
  cs_p.add("spread", "--spread", "4", "logits are drawn from [-spread, 0]");
  cs_p.add("lut_sizes", "--lut-sizes", "4,8,16,32", "LUT entry counts");
  cs_p.add("precisions", "--precisions", "4,6,8,10", "LUT fraction bits");
  cs_p.add("cdt_capacity", "--cdt-capacity", "256", "entries of the CDF sampler table");
  cs_p.add("out", "-o,--out", "", "output directory");

  int lut_size = GumbelLut::kDefaultSize, lut_prec = GumbelLut::kDefaultPrecision;
  std::string lut_out;
  auto* lut = app.add_subcommand("dump-lut", "print a Gumbel LUT as a text table");
  lut->add_option("--size", lut_size, "entries")->capture_default_str();
  lut->add_option("--precision", lut_prec, "fraction bits")->capture_default_str();
  lut->add_option("-o,--output", lut_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (ref->parsed()) {
      ref_p.resolve();
      run_ref(ref_p);
    } else if (cmp->parsed()) {
      cmp_p.resolve();
      run_compile(cmp_p);
    } else if (as->parsed()) {
      run_asm(asm_in, asm_out);
    } else if (dis->parsed()) {
      run_disasm(dis_in, dis_out);
    } else if (sim->parsed()) {
      sim_p.resolve();
      run_simulate(sim_p);
    } else if (roof->parsed()) {
      roof_p.resolve();
      run_roofline(roof_p);
    } else if (dse_cmd->parsed()) {
      dse_p.resolve();
      run_dse(dse_p);
    } else if (cs->parsed()) {
      cs_p.resolve();
      run_compare_samplers(cs_p);
    } else if (lut->parsed()) {
      run_dump_lut(lut_size, lut_prec, lut_out);
    }
  } catch (const Error& e) {
    std::cerr << "mc2a: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "mc2a: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInput);
  } catch (const std::exception& e) {
    std::cerr << "mc2a: internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInternalCheck);
  }
  return 0;
}
