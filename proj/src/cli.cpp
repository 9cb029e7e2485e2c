#include "gradcodec/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gradcodec/distfit.hpp"
#include "gradcodec/encode.hpp"
#include "gradcodec/fpquant.hpp"
#include "gradcodec/mcsim.hpp"
#include "gradcodec/prune.hpp"
#include "gradcodec/tensorio.hpp"

namespace gradcodec::cli {

namespace {

using nlohmann::json;

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw CLI::ValidationError("empty numeric list '" + text + "'");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_list(text)) out.push_back(static_cast<int>(v));
    return out;
}

// "v" or "lo:hi:step"
struct SigmaRange {
    double lo = 0.0, hi = 0.0, step = 0.1;
};

SigmaRange parse_sigma_range(const std::string& text) {
    SigmaRange r;
    double a, b, c;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &a, &b, &c) == 3) {
        r.lo = a; r.hi = b; r.step = c;
    } else {
        r.lo = r.hi = std::stod(text);
        r.step = 1.0;
    }
    return r;
}

void emit_report(const json& j, const std::string& out_path) {
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        io::atomic_write(out_path, j.dump(2) + "\n");
}

void emit_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        io::atomic_write(out_path, text);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int cmd_fit(const std::string& input, const std::string& families_arg, double quantile,
            const std::string& out) {
    auto dump = io::read_tensor(input);
    std::vector<distfit::Family> families;
    if (families_arg.empty()) {
        families = distfit::all_families();
    } else {
        std::stringstream ss(families_arg);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) families.push_back(distfit::parse_family(item));
    }
    auto report = distfit::fit_report(dump.values, families);

    json jfams = json::array();
    for (const auto& e : report) {
        json jf;
        jf["family"] = distfit::family_name(e.family);
        jf["convention"] = distfit::uses_magnitudes(e.family) ? "magnitudes" : "signed";
        if (e.ok) {
            jf["params"] = {{"a", e.params.a}, {"b", e.params.b}};
            jf["ks_stat"] = e.ks_stat;
            if (e.family == distfit::Family::lognormal) {
                auto ln = distfit::fit_lognormal(dump.values);
                jf["params"] = {{"mu", ln.mu}, {"sigma", ln.sigma},
                                {"k", distfit::estimate_truncation(dump.values, ln, quantile)}};
            }
        } else {
            jf["error"] = e.error;
        }
        jfams.push_back(jf);
        std::cout << distfit::family_name(e.family) << ": "
                  << (e.ok ? "ks=" + fmt_double(e.ks_stat) : "error: " + e.error) << "\n";
    }
    json j;
    j["schema"] = "gradcodec.fit/1";
    j["input"] = input;
    j["element_count"] = dump.element_count();
    j["quantile"] = quantile;
    j["families"] = jfams;
    emit_report(j, out);
    return 0;
}

int cmd_fpopt(const std::string& sigma_arg, const std::string& bits_arg, const std::string& prior_arg,
              const std::string& out) {
    auto prior = prior_arg == "normal" ? fpquant::Prior::normal : fpquant::Prior::lognormal;
    auto range = parse_sigma_range(sigma_arg);
    auto bits = parse_int_list(bits_arg);

    auto rows = fpquant::allocation_table(range.lo, range.hi, range.step, bits, prior);
    if (rows.size() == static_cast<std::size_t>(bits.size()) && bits.size() == 1) {
        const auto& r = rows.front();
        std::cout << r.format.str() << "\n";
        std::cout << "n2  n1  expected_error\n";
        for (int n2 = 1; n2 <= r.total_bits - 1; ++n2) {
            int n1 = r.total_bits - 1 - n2;
            std::cout << n2 << "   " << n1 << "   "
                      << fmt_double(fpquant::expected_relative_error(r.sigma, n1, n2, prior)) << "\n";
        }
    } else {
        for (const auto& r : rows)
            std::cout << "sigma=" << fmt_double(r.sigma) << " N=" << r.total_bits << " -> "
                      << r.format.str() << " (err " << fmt_double(r.expected_error) << ")\n";
    }
    std::string csv = "sigma,N,n2,n1,expected_error\n";
    for (const auto& r : rows)
        csv += fmt_double(r.sigma) + "," + std::to_string(r.total_bits) + "," +
               std::to_string(r.format.exponent_bits) + "," + std::to_string(r.format.mantissa_bits) +
               "," + fmt_double(r.expected_error) + "\n";
    if (!out.empty()) emit_text(csv, out);
    return 0;
}

fpquant::ScaleSpec parse_scale(const std::string& arg) {
    fpquant::ScaleSpec spec;
    if (arg.empty() || arg == "none") {
        spec.mode = fpquant::ScaleMode::none;
    } else if (arg == "per-layer") {
        spec.mode = fpquant::ScaleMode::per_layer;
    } else if (arg.rfind("fixed=", 0) == 0) {
        spec.mode = fpquant::ScaleMode::fixed;
        spec.c = std::stod(arg.substr(6));
    } else {
        throw CLI::ValidationError("bad --scale '" + arg + "' (none|fixed=<c>|per-layer)");
    }
    return spec;
}

int cmd_quantize(const std::string& input, const std::string& format_arg, const std::string& scale_arg,
                 const std::string& out, const std::string& report) {
    auto dump = io::read_tensor(input);
    auto fmt = FpFormat::parse(format_arg);
    auto spec = parse_scale(scale_arg);
    auto q = fpquant::quantize_tensor(dump.values, fmt, spec);

    if (!out.empty()) {
        TensorDump qd;
        qd.values = q.values;
        qd.layer_id = dump.layer_id;
        qd.metadata = dump.metadata;
        io::write_tensor(qd, out);
    }
    json j;
    j["schema"] = "gradcodec.quantize/1";
    j["input"] = input;
    j["format"] = fmt.str();
    j["scale_mode"] = scale_arg.empty() ? "none" : scale_arg;
    j["scale_log2"] = q.scale_log2;
    j["stats"] = {{"overflow_count", q.stats.overflow_count},
                  {"underflow_count", q.stats.underflow_count},
                  {"mean_relative_error", q.stats.mean_relative_error}};
    if (!out.empty()) j["output"] = out;
    std::cout << "format " << fmt.str() << "  scale_log2 " << fmt_double(q.scale_log2)
              << "  mean_rel_err " << fmt_double(q.stats.mean_relative_error) << "  overflow "
              << q.stats.overflow_count << "  underflow " << q.stats.underflow_count << "\n";
    emit_report(j, report);
    return 0;
}

int cmd_threshold(double mu, double sigma, double sparsity, std::optional<double> left_ratio,
                  const std::string& out) {
    double alpha, roundtrip;
    json j;
    j["schema"] = "gradcodec.threshold/1";
    j["mu"] = mu;
    j["sigma"] = sigma;
    j["target_sparsity"] = sparsity;
    if (left_ratio) {
        distfit::LognormalParams p{mu, sigma, 3.0};
        alpha = prune::bimodal_threshold(sparsity, *left_ratio, p);
        double right = prune::sparsity_given_threshold(alpha, mu, sigma);
        roundtrip = *left_ratio + (1.0 - *left_ratio) * right;
        j["left_ratio"] = *left_ratio;
        j["right_mode_sparsity"] = right;
    } else {
        alpha = prune::threshold_for_sparsity(sparsity, mu, sigma);
        roundtrip = prune::sparsity_given_threshold(alpha, mu, sigma);
    }
    j["alpha"] = alpha;
    j["roundtrip_sparsity"] = roundtrip;
    std::cout << "alpha " << fmt_double(alpha) << "  (roundtrip sparsity " << fmt_double(roundtrip)
              << ")\n";
    emit_report(j, out);
    return 0;
}

int cmd_prune(const std::string& input, double sparsity, std::uint64_t seed,
              const std::string& mask_path, const std::string& out, const std::string& report) {
    auto dump = io::read_tensor(input);
    std::optional<ZeroMask> mask;
    if (!mask_path.empty()) mask = io::read_mask(mask_path);
    auto outcome = prune::predict_and_prune(dump.values, sparsity, seed, mask ? &*mask : nullptr);

    std::string out_path = out.empty() ? input + ".pruned.grd" : out;
    TensorDump pd;
    pd.values = outcome.values;
    pd.layer_id = dump.layer_id;
    io::write_tensor(pd, out_path);

    json j;
    j["schema"] = "gradcodec.prune/1";
    j["input"] = input;
    j["seed"] = seed;
    j["alpha"] = outcome.report.alpha;
    j["target_sparsity"] = sparsity;
    j["achieved_sparsity"] = outcome.achieved_sparsity;
    j["analytic_cos"] = outcome.report.analytic_cos;
    if (outcome.report.empirical_cos) j["empirical_cos"] = *outcome.report.empirical_cos;
    j["fitted"] = {{"mu", outcome.fitted.mu}, {"sigma", outcome.fitted.sigma}, {"k", outcome.fitted.k}};
    if (!mask_path.empty()) j["left_ratio"] = outcome.left_ratio;
    j["output"] = out_path;
    std::cout << "alpha " << fmt_double(outcome.report.alpha) << "  achieved "
              << fmt_double(outcome.achieved_sparsity) << "  cos(analytic) "
              << fmt_double(outcome.report.analytic_cos) << "  -> " << out_path << "\n";
    emit_report(j, report);
    return 0;
}

int cmd_allocate(const std::string& layers_path, double sparsity, double max_cap,
                 const std::string& out) {
    std::ifstream in(layers_path);
    if (!in) throw std::runtime_error("cannot open " + layers_path);
    json jl = json::parse(in);
    std::vector<prune::LayerProfile> layers;
    for (const auto& e : jl) {
        prune::LayerProfile L;
        L.layer_id = e.at("layer_id").get<std::string>();
        L.n = e.at("n").get<std::uint64_t>();
        L.params.mu = e.at("mu").get<double>();
        L.params.sigma = e.at("sigma").get<double>();
        L.params.k = e.value("k", 3.0);
        L.depth_rank = e.value("depth_rank", 0);
        if (e.contains("min_cosine")) L.min_cosine = e.at("min_cosine").get<double>();
        if (e.contains("left_ratio")) L.left_ratio = e.at("left_ratio").get<double>();
        layers.push_back(L);
    }
    auto result = prune::heterogeneous_allocate(layers, sparsity, max_cap);

    json j;
    j["schema"] = "gradcodec.allocate/1";
    j["target_sparsity"] = sparsity;
    j["max_cap"] = max_cap;
    j["overall_sparsity"] = result.overall_sparsity;
    j["cap_bound"] = result.cap_bound;
    if (!result.warning.empty()) j["warning"] = result.warning;
    json arr = json::array();
    for (std::size_t i = 0; i < result.layers.size(); ++i) {
        const auto& a = result.layers[i];
        arr.push_back({{"layer_id", a.layer_id},
                       {"n", layers[i].n},
                       {"alpha", a.alpha},
                       {"sparsity", a.sparsity},
                       {"analytic_cos", a.analytic_cos},
                       {"constrained", a.constrained}});
        std::cout << a.layer_id << ": S=" << fmt_double(a.sparsity) << " alpha="
                  << fmt_double(a.alpha) << " cos=" << fmt_double(a.analytic_cos)
                  << (a.constrained ? " (cosine-constrained)" : "") << "\n";
    }
    j["layers"] = arr;
    std::cout << "overall sparsity " << fmt_double(result.overall_sparsity);
    if (!result.warning.empty()) std::cout << "  [" << result.warning << "]";
    std::cout << "\n";
    emit_report(j, out);
    return 0;
}

int cmd_encode(const std::string& input, double alpha, int width, const std::string& out) {
    auto dump = io::read_tensor(input);
    auto stream = encode::encode_stream(dump.values, static_cast<float>(alpha), width);
    std::string out_path = out.empty() ? input + ".enc" : out;
    encode::write_stream(stream, out_path);
    double bpv = encode::compression_ratio(stream.zero_count, stream.alpha_count,
                                           stream.passthrough_count, width);
    json j;
    j["schema"] = "gradcodec.encode/1";
    j["input"] = input;
    j["alpha"] = alpha;
    j["width"] = width;
    j["count"] = stream.count;
    j["bits"] = stream.bit_length;
    j["bits_per_value"] = bpv;
    j["counts"] = {{"zero", stream.zero_count},
                   {"alpha", stream.alpha_count},
                   {"passthrough", stream.passthrough_count}};
    j["output"] = out_path;
    std::cout << stream.count << " values -> " << stream.bit_length << " bits ("
              << fmt_double(bpv) << " bits/value) -> " << out_path << "\n";
    emit_report(j, "");
    return 0;
}

int cmd_decode(const std::string& input, const std::string& out) {
    auto stream = encode::read_stream(input);
    auto values = encode::decode_stream(stream);
    std::string out_path = out.empty() ? input + ".dec.grd" : out;
    TensorDump dump;
    dump.values = std::move(values);
    io::write_tensor(dump, out_path);
    std::cout << stream.count << " values decoded -> " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& kind, const std::string& sigma_arg, const std::string& bits_arg,
                 const std::string& sparsity_arg, const std::string& mu_arg, double k,
                 const std::string& prior_arg, std::size_t n, int reps, std::uint64_t seed,
                 const std::string& out) {
    std::string csv;
    if (kind == "relerr") {
        auto sigmas = parse_list(sigma_arg);
        auto bits = parse_int_list(bits_arg.empty() ? "8" : bits_arg);
        csv = "sigma,N,n2,n1,analytic,empirical,abs_gap\n";
        mcsim::SimConfig cfg;
        cfg.n = n ? n : 10000;
        cfg.seed = seed;
        cfg.repetitions = reps;
        for (double s : sigmas)
            for (int N : bits)
                for (int n2 = 1; n2 <= N - 1; ++n2) {
                    int n1 = N - 1 - n2;
                    double a = fpquant::expected_relative_error_lognormal(s, n1, n2);
                    double e = mcsim::empirical_relative_error(s, FpFormat(n2, n1), cfg);
                    csv += fmt_double(s) + "," + std::to_string(N) + "," + std::to_string(n2) + "," +
                           std::to_string(n1) + "," + fmt_double(a) + "," + fmt_double(e) + "," +
                           fmt_double(std::fabs(a - e)) + "\n";
                }
    } else if (kind == "sparsity") {
        auto sigmas = parse_list(sigma_arg);
        auto targets = parse_list(sparsity_arg);
        auto mus = parse_list(mu_arg.empty() ? "0" : mu_arg);
        auto prior = prior_arg == "normal" ? fpquant::Prior::normal : fpquant::Prior::lognormal;
        csv = "target,mu,sigma,prior,alpha,achieved,abs_gap\n";
        mcsim::SimConfig cfg;
        cfg.n = n ? n : 1000000;
        cfg.seed = seed;
        cfg.repetitions = reps;
        for (double t : targets)
            for (double m : mus)
                for (double s : sigmas) {
                    auto run = mcsim::empirical_sparsity(t, m, s, cfg, prior);
                    csv += fmt_double(t) + "," + fmt_double(m) + "," + fmt_double(s) + "," +
                           (prior == fpquant::Prior::normal ? "normal" : "lognormal") + "," +
                           fmt_double(run.alpha) + "," + fmt_double(run.achieved) + "," +
                           fmt_double(std::fabs(run.achieved - t)) + "\n";
                }
    } else if (kind == "cosine") {
        auto sigmas = parse_list(sigma_arg);
        auto targets = parse_list(sparsity_arg);
        csv = "sigma,k,target_sparsity,alpha,analytic,empirical,abs_gap\n";
        mcsim::SimConfig cfg;
        cfg.n = n ? n : 1000000;
        cfg.seed = seed;
        cfg.repetitions = reps;
        cfg.k = k;
        for (double s : sigmas)
            for (double t : targets) {
                double alpha = prune::threshold_for_sparsity(t, 0.0, s);
                cfg.sigma = s;
                double a = prune::analytic_cosine(alpha, s, k);
                double e = mcsim::empirical_cosine(alpha, cfg);
                csv += fmt_double(s) + "," + fmt_double(k) + "," + fmt_double(t) + "," +
                       fmt_double(alpha) + "," + fmt_double(a) + "," + fmt_double(e) + "," +
                       fmt_double(std::fabs(a - e)) + "\n";
            }
    } else {
        throw CLI::ValidationError("simulate kind must be relerr, sparsity or cosine");
    }
    std::cout << csv;
    if (!out.empty()) emit_text(csv, out);
    std::cout << "seed " << seed << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"lognormal gradient statistics: FP format search, stochastic pruning, codec"};
    app.require_subcommand(1);

    // fit
    std::string fit_input, fit_families, fit_out;
    double fit_quantile = 0.997;
    auto* fit = app.add_subcommand("fit", "fit distribution families to a tensor and rank by KS distance");
    fit->add_option("tensor", fit_input)->required();
    fit->add_option("--families", fit_families, "comma-separated family list");
    fit->add_option("--quantile", fit_quantile, "truncation quantile for the lognormal k");
    fit->add_option("--out", fit_out, "write the JSON report here");

    // fpopt
    std::string fpopt_sigma, fpopt_bits, fpopt_prior = "lognormal", fpopt_out;
    auto* fpopt = app.add_subcommand("fpopt", "optimal exponent/mantissa split for a bit budget");
    fpopt->add_option("--sigma", fpopt_sigma, "sigma of ln|x| (value or lo:hi:step)")->required();
    fpopt->add_option("--bits", fpopt_bits, "total bits (value or comma list)")->required();
    fpopt->add_option("--prior", fpopt_prior)->check(CLI::IsMember({"lognormal", "normal"}));
    fpopt->add_option("--out", fpopt_out, "write the allocation table CSV here");

    // quantize
    std::string q_input, q_format, q_scale = "none", q_out, q_report;
    auto* quant = app.add_subcommand("quantize", "emulated low-bit FP quantization of a tensor");
    quant->add_option("tensor", q_input)->required();
    quant->add_option("--format", q_format, "1-<exp>-<mant>")->required();
    quant->add_option("--scale", q_scale, "none | fixed=<c> | per-layer");
    quant->add_option("--out", q_out, "write the quantized tensor here");
    quant->add_option("--report", q_report, "write the JSON report here");

    // threshold
    double th_mu = 0.0, th_sigma = 0.0, th_sparsity = 0.0;
    double th_left = -1.0;
    std::string th_out;
    auto* th = app.add_subcommand("threshold", "solve the pruning threshold for a target sparsity");
    th->add_option("--mu", th_mu)->required();
    th->add_option("--sigma", th_sigma)->required();
    th->add_option("--sparsity", th_sparsity)->required();
    th->add_option("--left-ratio", th_left, "two-mode left fraction");
    th->add_option("--out", th_out);

    // prune
    std::string p_input, p_mask, p_out, p_report;
    double p_sparsity = 0.0;
    std::uint64_t p_seed = 0;
    auto* pr = app.add_subcommand("prune", "fit, solve the threshold and stochastically prune");
    pr->add_option("tensor", p_input)->required();
    pr->add_option("--sparsity", p_sparsity)->required();
    pr->add_option("--seed", p_seed);
    pr->add_option("--mask", p_mask, "zero mask marking the low mode");
    pr->add_option("--out", p_out, "pruned tensor path (default <input>.pruned.grd)");
    pr->add_option("--report", p_report, "write the JSON report here");

    // allocate
    std::string a_layers, a_out;
    double a_sparsity = 0.0, a_cap = 0.97;
    auto* alloc = app.add_subcommand("allocate", "per-layer sparsity under a global budget");
    alloc->add_option("--layers", a_layers, "layer profile JSON")->required();
    alloc->add_option("--sparsity", a_sparsity)->required();
    alloc->add_option("--max-cap", a_cap);
    alloc->add_option("--out", a_out);

    // encode / decode
    std::string e_input, e_out;
    double e_alpha = 0.0;
    int e_width = 32;
    auto* enc = app.add_subcommand("encode", "pack a pruned tensor into the prefix-coded stream");
    enc->add_option("tensor", e_input)->required();
    enc->add_option("--alpha", e_alpha)->required();
    enc->add_option("--width", e_width)->check(CLI::IsMember({16, 32}));
    enc->add_option("--out", e_out, "stream path (default <input>.enc)");

    std::string d_input, d_out;
    auto* dec = app.add_subcommand("decode", "unpack a stream back into a tensor");
    dec->add_option("stream", d_input)->required();
    dec->add_option("--out", d_out, "tensor path (default <input>.dec.grd)");

    // simulate
    std::string s_kind, s_sigma, s_bits, s_sparsity, s_mu, s_prior = "lognormal", s_out;
    double s_k = 2.5;
    std::size_t s_n = 0;
    int s_reps = 1;
    std::uint64_t s_seed = 0;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo oracle vs analytic formulas, CSV output");
    sim->add_option("kind", s_kind, "relerr | sparsity | cosine")->required();
    sim->add_option("--sigma", s_sigma)->required();
    sim->add_option("--bits", s_bits, "total bits for relerr");
    sim->add_option("--sparsity", s_sparsity, "target sparsity list");
    sim->add_option("--mu", s_mu, "mu list for sparsity runs");
    sim->add_option("--k", s_k, "truncation multiplier for cosine runs");
    sim->add_option("--prior", s_prior)->check(CLI::IsMember({"lognormal", "normal"}));
    sim->add_option("--n", s_n, "elements per tensor");
    sim->add_option("--reps", s_reps, "repetitions");
    sim->add_option("--seed", s_seed);
    sim->add_option("--out", s_out, "write the CSV here");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*fit) return cmd_fit(fit_input, fit_families, fit_quantile, fit_out);
        if (*fpopt) return cmd_fpopt(fpopt_sigma, fpopt_bits, fpopt_prior, fpopt_out);
        if (*quant) return cmd_quantize(q_input, q_format, q_scale, q_out, q_report);
        if (*th)
            return cmd_threshold(th_mu, th_sigma, th_sparsity,
                                 th_left >= 0.0 ? std::optional<double>(th_left) : std::nullopt, th_out);
        if (*pr) return cmd_prune(p_input, p_sparsity, p_seed, p_mask, p_out, p_report);
        if (*alloc) return cmd_allocate(a_layers, a_sparsity, a_cap, a_out);
        if (*enc) return cmd_encode(e_input, e_alpha, e_width, e_out);
        if (*dec) return cmd_decode(d_input, d_out);
        if (*sim)
            return cmd_simulate(s_kind, s_sigma, s_bits, s_sparsity, s_mu, s_k, s_prior, s_n, s_reps,
                                s_seed, s_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace gradcodec::cli
