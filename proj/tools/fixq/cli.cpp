#include "fixq/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "fixq/act_quant.hpp"
#include "fixq/audit.hpp"
#include "fixq/bundle.hpp"
#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"
#include "fixq/parallel.hpp"
#include "fixq/pipeline.hpp"
#include "fixq/toy_model.hpp"
#include "fixq/wcft.hpp"
#include "fixq/weight_quant.hpp"

namespace fixq::cli {

namespace {

struct Common {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool dry_run = false;
};

template <typename F>
auto for_tensor(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const FormatError& e) {
        throw FormatError("tensor '" + name + "': " + e.what());
    } catch (const ContractError& e) {
        throw ContractError("tensor '" + name + "': " + e.what());
    } catch (const NumericError& e) {
        throw NumericError("tensor '" + name + "': " + e.what());
    }
}

std::array<std::int64_t, 2> parse_hw(const std::string& s) {
    const auto x = s.find('x');
    std::array<std::int64_t, 2> hw{0, 0};
    auto parse = [&](std::string_view part, std::int64_t& v) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        return ec == std::errc() && p == part.data() + part.size() && v >= 1;
    };
    const std::string_view sv(s);
    if (x == std::string::npos || !parse(sv.substr(0, x), hw[0]) || !parse(sv.substr(x + 1), hw[1]))
        throw ContractError("expected HxW with positive integers, got '" + s + "'");
    return hw;
}

void check_bits(int bits, bool experimental) {
    if (bits != 8 && !experimental)
        throw ContractError("only 8-bit budgets are supported (pass --experimental-bits to try " +
                            std::to_string(bits) + ")");
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(9) << v;
    return os.str();
}

// quantize-weights --------------------------------------------------------

struct QuantizeWeightsArgs {
    std::string in, out, scheme = "cw", method = "nlq";
    int bits = 8;
    bool experimental = false;
};

int quantize_weights_cmd(const QuantizeWeightsArgs& a, const Common& c, std::ostream& out) {
    check_bits(a.bits, a.experimental);
    const GroupScheme scheme = scheme_from_string(a.scheme);
    const QuantMethod method = method_from_string(a.method);
    if (method == QuantMethod::Lloyd && scheme == GroupScheme::ChannelWise)
        throw ContractError("--method lloyd requires --scheme lw");
    TensorBundle b = read_bundle(a.in);
    std::size_t todo = 0;
    for (const BundleEntry& e : b.entries) todo += !e.is_quantized() && e.tensor().layout() == Layout::Weight;
    if (c.dry_run) {
        out << "plan: quantize " << todo << " weight tensor(s) from " << a.in << " with " << a.scheme << "-"
            << a.method << " N=" << a.bits << ", write " << a.out << "\n";
        return kExitOk;
    }
    for (BundleEntry& e : b.entries) {
        if (e.is_quantized() || e.tensor().layout() != Layout::Weight) continue;
        const Tensor t = e.tensor();
        QuantizedTensor q = for_tensor(e.name, [&] { return quantize_weights(t, scheme, method, a.bits); });
        const QuantError err = quant_error(t, q);
        out << e.name << ": groups=" << q.group_count() << " quant_error=" << fmt_double(err.total) << "\n";
        e.value = std::move(q);
    }
    write_bundle(b, a.out);
    return kExitOk;
}

// calibrate ---------------------------------------------------------------

struct CalibrateArgs {
    std::string weights, samples, out, activation = "none", name = "act";
    double mean_threshold = 3.0;
    bool no_mean = false, uniform = false;
    int bits = 8;
    bool experimental = false;
};

std::vector<Tensor> activation_entries(const TensorBundle& b) {
    std::vector<Tensor> v;
    for (const BundleEntry& e : b.entries)
        if (!e.is_quantized() && e.tensor().layout() == Layout::Activation) v.push_back(e.tensor());
    if (v.empty()) throw ContractError("sample bundle holds no f32 activation tensors");
    return v;
}

void print_profile_summary(const ProfileRecord& r, std::ostream& out) {
    std::array<std::size_t, 4> hist{};
    for (auto s : r.mux) ++hist[s];
    out << r.name << ": channels=" << r.sf_exponents.size();
    if (!r.sf_exponents.empty()) {
        const auto [lo, hi] = std::minmax_element(r.sf_exponents.begin(), r.sf_exponents.end());
        out << " sf=[" << int{*lo} << ", " << int{*hi} << "]";
    }
    if (!r.mux.empty()) out << " range_sel=" << hist[0] << "/" << hist[1] << "/" << hist[2] << "/" << hist[3];
    if (r.mean)
        out << " mean_channel=" << r.mean->channel << " a=" << fmt_double(r.mean->a) << " b=" << fmt_double(r.mean->b)
            << " r2=" << fmt_double(r.mean->r2);
    out << "\n";
}

int calibrate_cmd(const CalibrateArgs& a, const Common& c, std::ostream& out) {
    check_bits(a.bits, a.experimental);
    const TensorBundle samples = read_bundle(a.samples);
    const std::vector<Tensor> images = activation_entries(samples);
    if (c.dry_run) {
        out << "plan: calibrate " << (a.weights.empty() ? "one activation profile" : "network " + a.weights)
            << " on " << images.size() << " sample(s), write " << a.out << "\n";
        return kExitOk;
    }
    TensorBundle result;
    if (a.weights.empty()) {
        const ActivationKind kind = activation_from_string(a.activation);
        result.profiles.push_back(to_record(calibrate(images, kind, !a.uniform, a.name)));
        const IntervalStats st = interval_stats(images, kind, a.name);
        out << format_interval_table(std::span(&st, 1));
    } else {
        const auto net = load_network(read_bundle(a.weights), a.bits);
        CalibrationOptions opt;
        opt.mean_threshold = a.mean_threshold;
        opt.mean_removal = !a.no_mean;
        result = calibrate_network(net, images, opt);
    }
    for (const ProfileRecord& r : result.profiles) print_profile_summary(r, out);
    write_bundle(result, a.out);
    return kExitOk;
}

// quantize-acts -----------------------------------------------------------

struct QuantizeActsArgs {
    std::string in, profiles, out, profile;
};

int quantize_acts_cmd(const QuantizeActsArgs& a, const Common& c, std::ostream& out) {
    TensorBundle b = read_bundle(a.in);
    const TensorBundle profiles = read_bundle(a.profiles);
    std::map<std::string, CalibrationProfile> cache;
    auto profile_for = [&](const BundleEntry& e) -> CalibrationProfile& {
        std::string name = a.profile;
        if (name.empty()) {
            auto it = e.attrs.find("profile");
            name = it != e.attrs.end() ? it->second : e.name;
        }
        if (auto it = cache.find(name); it != cache.end()) return it->second;
        const ProfileRecord* r = profiles.find_profile(name);
        if (!r) throw ContractError("no calibration profile '" + name + "' for tensor '" + e.name + "'");
        return cache.emplace(name, profile_from_record(*r)).first->second;
    };
    std::size_t todo = 0;
    for (const BundleEntry& e : b.entries)
        if (!e.is_quantized() && e.tensor().layout() == Layout::Activation) {
            profile_for(e);
            ++todo;
        }
    if (c.dry_run) {
        out << "plan: quantize " << todo << " activation tensor(s) from " << a.in << ", write " << a.out << "\n";
        return kExitOk;
    }
    for (BundleEntry& e : b.entries) {
        if (e.is_quantized() || e.tensor().layout() != Layout::Activation) continue;
        CalibrationProfile& p = profile_for(e);
        std::vector<std::uint64_t> before = p.clip_count;
        before.resize(p.channels(), 0);
        const Tensor t = e.tensor();
        QuantizedTensor q = for_tensor(e.name, [&] { return quantize_activations(t, p); });
        std::uint64_t clipped = 0;
        for (std::size_t ch = 0; ch < p.channels(); ++ch) clipped += p.clip_count[ch] - before[ch];
        out << e.name << ": profile=" << p.name << " codebook=" << q.codebook_id << " clipped=" << clipped << "\n";
        e.value = std::move(q);
    }
    write_bundle(b, a.out);
    return kExitOk;
}

// infer -------------------------------------------------------------------

struct InferArgs {
    std::string weights, profiles, input, out, entry;
};

int infer_cmd(const InferArgs& a, const Common& c, std::ostream& out) {
    const auto net = load_network(read_bundle(a.weights));
    const TensorBundle profiles = read_bundle(a.profiles);
    const TensorBundle input = read_bundle(a.input);
    std::vector<const BundleEntry*> todo;
    for (const BundleEntry& e : input.entries)
        if (!e.is_quantized() && e.tensor().layout() == Layout::Activation && (a.entry.empty() || e.name == a.entry))
            todo.push_back(&e);
    if (todo.empty()) throw ContractError("input bundle holds no matching f32 activation tensors");
    if (c.dry_run) {
        out << "plan: run " << net.size() << " layer(s) on " << todo.size() << " input(s), write " << a.out << "\n";
        return kExitOk;
    }
    TensorBundle result;
    for (const BundleEntry* e : todo) {
        const PipelineResult r = for_tensor(e->name, [&] { return pipeline_demo(e->tensor(), net, profiles); });
        out << "input " << e->name << "\n" << r.report();
        result.add(e->name + ".y_hat", r.y_q, {{"source", e->name}});
    }
    write_bundle(result, a.out);
    return kExitOk;
}

// wcft --------------------------------------------------------------------

struct WcftArgs {
    std::string preset = "low-rate", mode = "magnitude", out, log;
    int normal_iters = 200;
    double scale = 1e-3;
    double lr = 0.05;
    int log_every = 0;
};

int wcft_cmd(const WcftArgs& a, const Common& c, std::ostream& out) {
    const ClipSpec spec = preset_by_name(a.preset, a.normal_iters, a.scale);
    spec.validate();
    TrainOptions opt;
    opt.learning_rate = a.lr;
    opt.mode = clip_mode_from_string(a.mode);
    opt.log_every = a.log_every;
    int total = spec.normal_iters;
    for (int n : spec.finetune_iters) total += n;
    if (c.dry_run) {
        out << "plan: toy regression seed=" << c.seed << " normal=" << spec.normal_iters << " rounds=" << spec.rounds();
        for (std::size_t r = 0; r < spec.rounds(); ++r)
            out << " (beta=" << fmt_double(spec.betas[r]) << ", finetune=" << spec.finetune_iters[r] << ")";
        out << "; baseline " << total << " plain steps\n";
        return kExitOk;
    }
    const ToyConvRegression model(ToyConfig{}, c.seed);
    const WcftResult clipped = wcft_train(model, model.initial_weights(), spec, opt);
    const WcftResult plain = wcft_train(model, model.initial_weights(), ClipSpec{total, {}, {}}, opt);
    for (const std::string& line : clipped.log) out << line << "\n";
    out << "wcft quant_error=" << fmt_double(clipped.quant_error) << " loss=" << fmt_double(clipped.final_loss) << "\n";
    out << "plain quant_error=" << fmt_double(plain.quant_error) << " loss=" << fmt_double(plain.final_loss) << "\n";
    if (!a.log.empty()) {
        std::ofstream f(a.log, std::ios::binary);
        if (!f) throw FormatError("cannot write log " + a.log);
        for (const std::string& line : clipped.log) f << line << "\n";
    }
    if (!a.out.empty()) {
        TensorBundle b;
        b.attrs = {{"preset", a.preset}, {"seed", std::to_string(c.seed)}};
        for (std::size_t i = 0; i < clipped.quantized.size(); ++i)
            b.add("w" + std::to_string(i), clipped.quantized[i], {{"kind", "conv"}, {"order", std::to_string(i)}});
        write_bundle(b, a.out);
    }
    return kExitOk;
}

// audit -------------------------------------------------------------------

struct AuditArgs {
    std::string config, weights, input_hw, format = "text", mean_dims;
    std::vector<std::string> bundles;
    int bits = 9, mean_bits = 8;
    bool exclude_gdn = false;
};

int audit_cmd(const AuditArgs& a, const Common& c, std::ostream& out) {
    if (a.format != "text" && a.format != "json") throw ContractError("--format must be text or json");
    if (a.config.empty() && a.weights.empty() && a.mean_dims.empty() && a.bundles.empty())
        throw ContractError("audit needs --config, --weights, --mean-removal or --bundle");
    std::optional<NetworkConfig> cfg;
    if (!a.config.empty()) {
        cfg = load_network_config(a.config);
        if (!a.input_hw.empty()) {
            const auto hw = parse_hw(a.input_hw);
            cfg->in_h = hw[0];
            cfg->in_w = hw[1];
        }
    } else if (!a.weights.empty()) {
        if (a.input_hw.empty()) throw ContractError("--weights needs --input-hw HxW");
        const auto hw = parse_hw(a.input_hw);
        cfg = config_from_network(load_network(read_bundle(a.weights)), hw[0], hw[1], a.weights);
    }
    std::vector<TensorBundle> bundles;
    for (const std::string& p : a.bundles) bundles.push_back(read_bundle(p));
    if (c.dry_run) {
        out << "plan: audit" << (cfg ? " network " + cfg->name : std::string()) << " with " << bundles.size()
            << " bundle(s)" << (a.mean_dims.empty() ? "" : ", mean removal " + a.mean_dims) << "\n";
        return kExitOk;
    }
    if (cfg) {
        AuditReport r = audit_network(*cfg, AuditOptions{a.exclude_gdn});
        for (const TensorBundle& b : bundles)
            for (std::string& w : sf_range_warnings(b)) r.warnings.push_back(std::move(w));
        out << (a.format == "json" ? format_audit_json(r) + "\n" : format_audit_text(r));
    } else {
        for (const TensorBundle& b : bundles)
            for (const std::string& w : sf_range_warnings(b)) out << "warning: " << w << "\n";
    }
    if (!a.mean_dims.empty()) {
        const auto hw = parse_hw(a.mean_dims);
        const MeanRemovalReport m =
            mean_removal_report(static_cast<std::uint64_t>(hw[0] * hw[1]), a.bits, a.mean_bits);
        out << format_mean_removal(m);
    }
    return kExitOk;
}

// validate-codebooks ------------------------------------------------------

struct ValidateArgs {
    std::vector<std::string> ids;
    std::string dump;
};

int validate_cmd(const ValidateArgs& a, const Common& c, std::ostream& out) {
    std::vector<const Codebook*> books;
    if (a.ids.empty())
        for (const Codebook& cb : catalog()) books.push_back(&cb);
    else
        for (const std::string& id : a.ids) books.push_back(&codebook(id));
    if (c.dry_run) {
        out << "plan: validate " << books.size() << " codebook(s)" << (a.dump.empty() ? "" : ", dump to " + a.dump)
            << "\n";
        return kExitOk;
    }
    bool ok = true;
    for (const Codebook* cb : books) {
        const CodebookReport r = validate_codebook(*cb);
        const bool exact = r.ok && cb->grid().size() == static_cast<std::size_t>(r.expected);
        out << budget_ledger(*cb) << "  enumerated=" << (r.ok ? cb->grid().size() : 0) << "\n";
        for (const CodebookViolation& v : r.violations)
            out << "  violation " << to_string(v.kind) << " piece " << v.piece << ": " << v.detail << "\n";
        ok = ok && exact;
    }
    if (!a.dump.empty()) {
        std::ofstream f(a.dump, std::ios::binary);
        if (!f) throw FormatError("cannot write " + a.dump);
        f << dump_catalog();
    }
    out << (ok ? "all codebooks pass\n" : "codebook validation failed\n");
    return ok ? kExitOk : kExitContract;
}

std::optional<std::uint64_t> env_u64(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    std::uint64_t x = 0;
    const std::string_view s(v);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ContractError(std::string(name) + " must be a non-negative integer, got '" + v + "'");
    return x;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamic fixed-point quantization toolkit", "fixq"};
    app.require_subcommand(1);
    Common common;
    std::optional<std::uint64_t> seed_flag;
    std::optional<unsigned> threads_flag;
    app.add_option("--seed", seed_flag, "Random seed (env FIXQ_SEED)");
    app.add_option("--threads", threads_flag, "Worker threads, 0 = all cores (env FIXQ_THREADS)");
    app.add_flag("--dry-run", common.dry_run, "Print the plan without writing anything");

    std::function<int()> action;

    QuantizeWeightsArgs qw;
    auto* sq = app.add_subcommand("quantize-weights", "Quantize f32 weight tensors of a bundle");
    sq->add_option("--in", qw.in, "Input bundle")->required();
    sq->add_option("--out", qw.out, "Output bundle")->required();
    sq->add_option("--scheme", qw.scheme, "cw | lw");
    sq->add_option("--method", qw.method, "lq | nlq | lloyd");
    sq->add_option("--bits", qw.bits, "Bits per element");
    sq->add_flag("--experimental-bits", qw.experimental, "Allow budgets other than 8 bits");
    sq->add_flag("--dry-run", common.dry_run);
    sq->callback([&] { action = [&] { return quantize_weights_cmd(qw, common, out); }; });

    CalibrateArgs ca;
    auto* sc = app.add_subcommand("calibrate", "Build activation calibration profiles");
    sc->add_option("--samples", ca.samples, "Bundle of f32 activation samples (images)")->required();
    sc->add_option("--out", ca.out, "Output profile bundle")->required();
    sc->add_option("--weights", ca.weights, "Network weight bundle (sequential calibration)");
    sc->add_option("--activation", ca.activation, "relu | leaky_relu | none (single-profile mode)");
    sc->add_option("--name", ca.name, "Profile name (single-profile mode)");
    sc->add_flag("--uniform", ca.uniform, "Uniform codebook instead of the range multiplexer");
    sc->add_option("--mean-threshold", ca.mean_threshold, "|mean|/std needed for a mean-coded output channel");
    sc->add_flag("--no-mean-removal", ca.no_mean, "Disable mean-coded output channel detection");
    sc->add_option("--bits", ca.bits, "Weight bits for f32 weights");
    sc->add_flag("--experimental-bits", ca.experimental);
    sc->add_flag("--dry-run", common.dry_run);
    sc->callback([&] { action = [&] { return calibrate_cmd(ca, common, out); }; });

    QuantizeActsArgs qa;
    auto* sa = app.add_subcommand("quantize-acts", "Quantize f32 activation tensors with calibration profiles");
    sa->add_option("--in", qa.in, "Input bundle")->required();
    sa->add_option("--profiles", qa.profiles, "Profile bundle")->required();
    sa->add_option("--out", qa.out, "Output bundle")->required();
    sa->add_option("--profile", qa.profile, "Profile to use for every tensor");
    sa->add_flag("--dry-run", common.dry_run);
    sa->callback([&] { action = [&] { return quantize_acts_cmd(qa, common, out); }; });

    InferArgs ia;
    auto* si = app.add_subcommand("infer", "Run the network in fixed-point arithmetic");
    si->add_option("--weights", ia.weights, "Weight bundle")->required();
    si->add_option("--profiles", ia.profiles, "Profile bundle")->required();
    si->add_option("--input", ia.input, "Bundle of f32 input images")->required();
    si->add_option("--out", ia.out, "Output bundle of integer codes")->required();
    si->add_option("--entry", ia.entry, "Only run this input entry");
    si->add_flag("--dry-run", common.dry_run);
    si->callback([&] { action = [&] { return infer_cmd(ia, common, out); }; });

    WcftArgs wa;
    auto* sw = app.add_subcommand("wcft", "Weight clipping fine-tuning on the toy regression model");
    sw->add_option("--preset", wa.preset, "low-rate | high-rate | none");
    sw->add_option("--normal-iters", wa.normal_iters, "Plain training steps before clipping");
    sw->add_option("--iters-scale", wa.scale, "Multiplier on the preset fine-tuning iteration counts");
    sw->add_option("--lr", wa.lr, "Learning rate");
    sw->add_option("--clip-mode", wa.mode, "magnitude | upper");
    sw->add_option("--log-every", wa.log_every, "Log every n-th iteration (0 = off)");
    sw->add_option("--log", wa.log, "Metrics log file");
    sw->add_option("--out", wa.out, "Bundle for the quantized weights");
    sw->add_flag("--dry-run", common.dry_run);
    sw->callback([&] { action = [&] { return wcft_cmd(wa, common, out); }; });

    AuditArgs aa;
    auto* sd = app.add_subcommand("audit", "Memory and energy accounting");
    sd->add_option("--config", aa.config, "Network config (JSON)");
    sd->add_option("--weights", aa.weights, "Weight bundle to account instead of a config");
    sd->add_option("--input-hw", aa.input_hw, "Input size HxW");
    sd->add_option("--format", aa.format, "text | json");
    sd->add_flag("--exclude-gdn", aa.exclude_gdn, "Exclude normalization parameters from weight totals");
    sd->add_option("--mean-removal", aa.mean_dims, "Channel size HxW for the mean-removal report");
    sd->add_option("--bits", aa.bits, "Bits per element before mean removal");
    sd->add_option("--mean-bits", aa.mean_bits, "Bits of the transmitted mean");
    sd->add_option("--bundle", aa.bundles, "Bundle whose scale exponents are range-checked");
    sd->add_flag("--dry-run", common.dry_run);
    sd->callback([&] { action = [&] { return audit_cmd(aa, common, out); }; });

    ValidateArgs va;
    auto* sv = app.add_subcommand("validate-codebooks", "Check every registered codebook's bit budget");
    sv->add_option("--id", va.ids, "Codebook id (repeatable; default all)");
    sv->add_option("--dump", va.dump, "Write the catalog ledger to a file");
    sv->add_flag("--dry-run", common.dry_run);
    sv->callback([&] { action = [&] { return validate_cmd(va, common, out); }; });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "fixq: " << e.what() << "\n";
        return kExitContract;
    }

    try {
        common.seed = seed_flag ? *seed_flag : env_u64("FIXQ_SEED").value_or(0);
        const auto threads = threads_flag ? std::optional<std::uint64_t>(*threads_flag) : env_u64("FIXQ_THREADS");
        if (threads) set_thread_count(static_cast<unsigned>(*threads));
        return action();
    } catch (const Error& e) {
        err << "fixq: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "fixq: " << e.what() << "\n";
        return kExitFormat;
    }
}

}  // namespace fixq::cli
