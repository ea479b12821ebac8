#include <cstdio>
#include <exception>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <embodied/embodied.hpp>

namespace {

using namespace embodied;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIncomplete = 4;

// Flags are captured as strings and funneled through Settings::set so files
// and flags share one parser, with flags winning.
struct PendingOverrides {
    std::vector<std::pair<std::string, std::string>> kv;

    void apply(Settings& s) const {
        for (const auto& [k, v] : kv) s.set(k, v);
    }
};

void add_common_options(CLI::App* cmd, std::string& config_path, PendingOverrides& ov) {
    cmd->add_option("--config", config_path, "key=value config file; flags override");
    const auto bind = [cmd, &ov](const std::string& flag, const std::string& key,
                                 const std::string& help) {
        cmd->add_option_function<std::string>(
               flag, [&ov, key](const std::string& v) { ov.kv.emplace_back(key, v); }, help)
            ->expected(1);
    };
    bind("--data-dir", "data_dir", "directory holding the MNIST idx files");
    bind("--sizes", "sizes", "comma-separated training sizes");
    bind("--epochs", "epochs", "training epochs per run");
    bind("--reps,--repetitions", "repetitions", "repetitions per grid cell");
    bind("--seed", "base_seed", "base seed; repetition k uses base+k");
    bind("--models", "models", "comma-separated subset of baseline,inception,embodied");
    bind("--alpha", "alpha", "significance level for the summaries");
    bind("--weight-schedule", "weight_schedule", "auxiliary-loss weights as size:w,size:w,...");
    bind("--batch-size", "batch_size", "mini-batch size below the full-database threshold");
    bind("--batch-size-full", "batch_size_full", "mini-batch size at the full database");
    bind("--eta", "eta", "Adam learning rate");
    bind("--beta1", "beta1", "Adam first-moment decay");
    bind("--beta2", "beta2", "Adam second-moment decay");
    bind("--epsilon-hat", "epsilon_hat", "Adam denominator epsilon");
    bind("--bn-momentum", "bn_momentum", "batch-norm running-stat momentum");
    bind("--bn-epsilon", "bn_epsilon", "batch-norm variance epsilon");
    bind("--drop-conv", "drop_conv", "dropout rate after convolutional blocks");
    bind("--drop-dense", "drop_dense", "dropout rate after dense blocks");
    bind("--relu-init-gain", "relu_init_gain", "init gain on ReLU layers");
    bind("--aux-init-gain", "aux_init_gain", "init gain on auxiliary heads");
    bind("--fixed-subset", "fixed_subset", "reuse one subset across repetitions (0/1)");
    bind("--stratified", "stratified", "stratified subset sampling (0/1)");
    bind("--jobs", "jobs", "parallel training runs");
    bind("--records", "records", "records csv path");
    bind("--link", "link", "pre-trained link checkpoint for embodied runs");
    bind("--finger-codes", "finger_codes", "finger-code table file");
    bind("--out-dir", "out_dir", "directory for summary tables and plots");
}

Settings resolve_settings(const std::string& config_path, const PendingOverrides& ov) {
    Settings s;
    if (!config_path.empty()) load_config_file(s, config_path);
    ov.apply(s);
    s.validate();
    return s;
}

void print_config(const Settings& s) {
    std::istringstream cfg(s.serialize());
    std::string line;
    while (std::getline(cfg, line)) std::printf("# %s\n", line.c_str());
    std::printf("# config_hash=%llu\n", (unsigned long long)(s.hash()));
}

FingerCodeTable resolve_fingers(const Settings& s) {
    return s.finger_codes_path.empty() ? default_finger_codes()
                                       : load_finger_codes(s.finger_codes_path);
}

int cmd_pretrain(const Settings& s, const std::string& out_path, long long step_cap,
                 double loss_margin) {
    const FingerCodeTable table = resolve_fingers(s);
    PretrainConfig pc;
    pc.optimizer = s.optimizer;
    pc.seed = s.base_seed;
    if (step_cap > 0) pc.step_cap = step_cap;
    if (loss_margin > 0) pc.loss_margin = loss_margin;
    print_config(s);
    const PretrainedLink link = pretrain_stage1(table, pc);
    save_link(out_path, link, finger_code_hash(table));
    std::printf("pretrained link: steps=%lld final_loss=%.6f accuracy=%.0f/10 -> %s\n",
                link.steps_used, link.final_loss, link.final_accuracy * 10, out_path.c_str());
    return kExitOk;
}

int cmd_train(const Settings& s, const std::string& model_name, std::size_t size, long long rep,
              const std::string& save_path) {
    const FingerCodeTable fingers = resolve_fingers(s);
    const std::string dir = resolve_data_dir(s.data_dir);
    Dataset<double> train_full = load_mnist_train<double>(dir);
    Dataset<double> test = load_mnist_test<double>(dir);
    RunTask task;
    task.model = parse_variant(model_name);
    task.size = size;
    task.rep = rep;
    std::optional<PretrainedLink> fixed_link;
    if (!s.link_path.empty()) {
        std::uint64_t link_hash = 0;
        fixed_link = load_link(s.link_path, &link_hash);
        if (link_hash != finger_code_hash(fingers))
            throw ConfigInvalid("pre-trained link was built from a different finger-code table");
    }
    print_config(s);
    std::printf("epoch,train_acc,test_acc,whole_acc,loss\n");
    Network<double> net;
    const RunRecord rec =
        run_one(s, train_full, test, fingers, fixed_link, task, save_path.empty() ? nullptr : &net);
    for (std::size_t e = 0; e < rec.epochs.size(); ++e) {
        const EpochRow& row = rec.epochs[e];
        std::printf("%zu,%.17g,%.17g,%.17g,%.17g\n", e + 1, row.train_acc, row.test_acc,
                    row.whole_acc, row.loss);
    }
    std::printf("# wall seconds=%.2f seed=%llu\n", rec.wall_seconds,
                (unsigned long long)(rec.seed));
    if (!save_path.empty()) {
        save_model(save_path, net, finger_code_hash(fingers));
        std::printf("# checkpoint=%s\n", save_path.c_str());
    }
    return kExitOk;
}

int cmd_experiment(const Settings& s, bool quiet) {
    const FingerCodeTable fingers = resolve_fingers(s);
    const std::string dir = resolve_data_dir(s.data_dir);
    Dataset<double> train_full = load_mnist_train<double>(dir);
    Dataset<double> test = load_mnist_test<double>(dir);
    print_config(s);
    const RecordsData data = run_experiment(s, train_full, test, fingers, quiet);
    std::printf("experiment complete: %zu runs in %s\n", data.runs.size(), s.records_path.c_str());
    return kExitOk;
}

int cmd_summarize(const Settings& s) {
    const RecordsData data = load_records(s.records_path);
    if (data.has_config_hash && data.config_hash != s.hash())
        std::fprintf(stderr,
                     "warning: records config hash %llu differs from the resolved config %llu; "
                     "summarizing with the resolved grid\n",
                     (unsigned long long)(data.config_hash), (unsigned long long)(s.hash()));
    const SummaryResult result = summarize(data, s);
    write_summary_files(result, s);
    print_config(s);
    std::fputs(render_summary_text(result, s).c_str(), stdout);
    std::printf("summary files written to %s\n", s.out_dir.c_str());
    return kExitOk;
}

int cmd_gradcheck(const Settings& s, const std::string& which, std::size_t batch, double tolerance,
                  std::size_t samples) {
    print_config(s);
    std::vector<Variant> variants;
    if (which == "all") {
        variants = {Variant::Baseline, Variant::InceptionLike, Variant::Embodied};
    } else {
        variants = {parse_variant(which)};
    }
    bool ok = true;
    for (Variant v : variants) {
        const GradCheckReport report = gradcheck_model(v, batch, s.base_seed, 1e-6, samples);
        std::printf("%s: worst relative error %.3e (%s)\n", variant_name(v).c_str(), report.worst,
                    report.passes(tolerance) ? "pass" : "FAIL");
        for (const GradCheckEntry& e : report.entries)
            std::printf("  %-20s %.3e over %zu elements\n", e.name.c_str(), e.max_rel_err, e.checked);
        ok = ok && report.passes(tolerance);
    }
    if (!ok) {
        std::fprintf(stderr, "gradient check failed at tolerance %.1e\n", tolerance);
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_inspect_data(const Settings& s) {
    const std::string dir = resolve_data_dir(s.data_dir);
    print_config(s);
    Dataset<double> train = load_mnist_train<double>(dir);
    Dataset<double> test = load_mnist_test<double>(dir);
    const auto describe = [](const char* name, const Dataset<double>& d) {
        std::size_t hist[10] = {0};
        for (std::uint8_t l : d.labels) ++hist[l];
        double lo = 1e9, hi = -1e9;
        for (std::size_t i = 0; i < d.images.size(); ++i) {
            lo = std::min(lo, d.images[i]);
            hi = std::max(hi, d.images[i]);
        }
        std::printf("%s: %zu examples of 28x28, pixel range [%g, %g]\n", name, d.count(), lo, hi);
        std::printf("  label histogram:");
        for (int c = 0; c < 10; ++c) std::printf(" %d:%zu", c, hist[c]);
        std::printf("\n");
    };
    describe("train", train);
    describe("test", test);
    const FingerCodeTable table = resolve_fingers(s);
    std::printf("finger codes (hash %llu):\n", (unsigned long long)(finger_code_hash(table)));
    for (std::size_t d = 0; d < 10; ++d) {
        std::printf("  %zu:", d);
        for (double v : table.codes[d]) std::printf(" %g", v);
        std::printf("\n");
    }
    return kExitOk;
}

int classify_error(const std::exception& e) {
    if (dynamic_cast<const IncompleteGrid*>(&e)) return kExitIncomplete;
    if (dynamic_cast<const ConfigInvalid*>(&e) || dynamic_cast<const NonPositiveSize*>(&e) ||
        dynamic_cast<const MissingPretrainedLink*>(&e))
        return kExitUsage;
    if (dynamic_cast<const BadMagic*>(&e) || dynamic_cast<const Truncated*>(&e) ||
        dynamic_cast<const TrailingBytes*>(&e) || dynamic_cast<const LabelOutOfRange*>(&e) ||
        dynamic_cast<const SizeTooLarge*>(&e) || dynamic_cast<const DataMissing*>(&e) ||
        dynamic_cast<const ParseError*>(&e) || dynamic_cast<const RangeViolation*>(&e) ||
        dynamic_cast<const DuplicateCode*>(&e) || dynamic_cast<const MissingDigit*>(&e) ||
        dynamic_cast<const EmptyDataset*>(&e))
        return kExitData;
    return kExitNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Embodied-trained digit classifiers: training, experiments, and analysis"};
    app.require_subcommand(1);

    std::string config_path;
    PendingOverrides ov;

    CLI::App* pretrain = app.add_subcommand("pretrain", "train the finger-code link (stage 1)");
    std::string pretrain_out = "pretrain.ckpt";
    long long step_cap = 0;
    double loss_margin = 0.0;
    add_common_options(pretrain, config_path, ov);
    pretrain->add_option("--out", pretrain_out, "output checkpoint path");
    pretrain->add_option("--step-cap", step_cap, "maximum optimizer steps");
    pretrain->add_option("--loss-margin", loss_margin, "target mean cross-entropy after convergence");

    CLI::App* train = app.add_subcommand("train", "train one model on one subset");
    std::string train_model = "baseline";
    std::size_t train_size = 1024;
    long long train_rep = 0;
    std::string train_save;
    add_common_options(train, config_path, ov);
    train->add_option("--model", train_model, "baseline | inception | embodied");
    train->add_option("--size", train_size, "training-subset size");
    train->add_option("--rep", train_rep, "repetition index (seed = base+rep)");
    train->add_option("--save", train_save, "write the trained parameters here");

    CLI::App* experiment = app.add_subcommand("experiment", "run the full grid into a records file");
    bool quiet = false;
    add_common_options(experiment, config_path, ov);
    experiment->add_flag("--quiet", quiet, "suppress per-run progress");

    CLI::App* summarize_cmd = app.add_subcommand("summarize", "tables, curves and plots from records");
    add_common_options(summarize_cmd, config_path, ov);

    CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    std::string gc_model = "all";
    std::size_t gc_batch = 4;
    double gc_tol = 1e-4;
    std::size_t gc_samples = 8;
    add_common_options(gradcheck_cmd, config_path, ov);
    gradcheck_cmd->add_option("--model", gc_model, "all | baseline | inception | embodied");
    gradcheck_cmd->add_option("--batch", gc_batch, "probe batch size");
    gradcheck_cmd->add_option("--tolerance", gc_tol, "max relative error accepted");
    gradcheck_cmd->add_option("--samples", gc_samples, "elements probed per tensor");

    CLI::App* inspect = app.add_subcommand("inspect-data", "verify and describe the dataset files");
    add_common_options(inspect, config_path, ov);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        const Settings settings = resolve_settings(config_path, ov);
        if (pretrain->parsed()) return cmd_pretrain(settings, pretrain_out, step_cap, loss_margin);
        if (train->parsed()) return cmd_train(settings, train_model, train_size, train_rep, train_save);
        if (experiment->parsed()) return cmd_experiment(settings, quiet);
        if (summarize_cmd->parsed()) return cmd_summarize(settings);
        if (gradcheck_cmd->parsed())
            return cmd_gradcheck(settings, gc_model, gc_batch, gc_tol, gc_samples);
        if (inspect->parsed()) return cmd_inspect_data(settings);
        std::fprintf(stderr, "no subcommand selected\n");
        return kExitUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return classify_error(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}
