#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "fingers.hpp"
#include "loss.hpp"
#include "model.hpp"
#include "pretrain.hpp"
#include "records.hpp"
#include "trainer.hpp"

namespace embodied {

struct RunTask {
    Variant model;
    std::size_t size = 0;
    long long rep = 0;
};

// One grid cell: subset draw, model build, epochs of training with per-epoch
// evaluation on the training subset, the test set, and their union. The
// trained network is copied out when trained_out is given.
template <typename T = double>
RunRecord run_one(const Settings& s, const Dataset<T>& train_full, const Dataset<T>& test,
                  const FingerCodeTable& fingers, const std::optional<PretrainedLink>& fixed_link,
                  const RunTask& task, Network<T>* trained_out = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = s.base_seed + std::uint64_t(task.rep);
    const std::uint64_t subset_seed = s.fixed_subset ? s.base_seed : seed;
    Dataset<T> subset = stratified_subset(train_full, task.size, subset_seed, s.stratified);

    ModelSpec spec;
    spec.variant = task.model;
    spec.loss_weights.embodied_weight = embodied_loss_weight((long long)(task.size), s.schedule);
    if (task.model == Variant::Embodied) {
        if (fixed_link) {
            spec.pretrained_link = *fixed_link;
        } else {
            PretrainConfig pc;
            pc.optimizer = s.optimizer;
            pc.seed = seed;
            spec.pretrained_link = pretrain_stage1(fingers, pc);
        }
    }
    Network<T> net = build_model<T>(spec, seed, s.network);

    AdamState<T> state;
    RngStream shuffle_rng(seed, "shuffle");
    RngStream dropout_rng(seed, "dropout");
    const std::size_t batch = s.batch_for(task.size);

    RunRecord rec;
    rec.model = task.model;
    rec.size = task.size;
    rec.rep = task.rep;
    rec.seed = seed;
    rec.epochs.reserve(std::size_t(s.epochs));
    for (long long epoch = 1; epoch <= s.epochs; ++epoch) {
        EpochMetrics m = train_epoch(net, subset, batch, shuffle_rng, dropout_rng,
                                     spec.loss_weights, fingers, state, s.optimizer);
        EpochRow row;
        row.loss = m.mean_loss;
        row.train_acc = evaluate(net, subset);
        row.test_acc = evaluate(net, test);
        row.whole_acc = whole_db_accuracy(subset.count(), row.train_acc, test.count(), row.test_acc);
        rec.epochs.push_back(row);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (trained_out) *trained_out = net;
    return rec;
}

inline std::vector<RunTask> grid_tasks(const Settings& s) {
    std::vector<RunTask> tasks;
    for (std::size_t size : s.sizes)
        for (Variant m : s.models)
            for (long long rep = 0; rep < s.repetitions; ++rep)
                tasks.push_back(RunTask{m, size, rep});
    return tasks;
}

// Runs the grid, resuming from an existing records file when its config hash
// matches. Workers run independent (network, optimizer, rng) triples; records
// append strictly in grid order so reruns produce identical files.
template <typename T = double>
RecordsData run_experiment(const Settings& s, const Dataset<T>& train_full, const Dataset<T>& test,
                           const FingerCodeTable& fingers, bool quiet = false) {
    s.validate();
    if (train_full.count() == 0 || test.count() == 0) throw EmptyDataset("experiment needs data");
    std::optional<PretrainedLink> fixed_link;
    if (!s.link_path.empty()) {
        std::uint64_t link_finger_hash = 0;
        fixed_link = load_link(s.link_path, &link_finger_hash);
        if (link_finger_hash != finger_code_hash(fingers))
            throw ConfigInvalid("pre-trained link was built from a different finger-code table");
    }

    RecordsData existing;
    const bool have_file = std::filesystem::exists(s.records_path);
    if (have_file) {
        existing = load_records(s.records_path);
        if (existing.has_config_hash && existing.config_hash != s.hash())
            throw ConfigInvalid("records file '" + s.records_path +
                                "' was produced by a different configuration; "
                                "point --records somewhere fresh or align the config");
    }
    // Keep only runs that already cover the requested epochs; rewrite the file
    // compacted if torn groups are present, so appends stay well-formed.
    std::vector<RunRecord> complete;
    bool torn = false;
    for (RunRecord& r : existing.runs) {
        if ((long long)(r.epochs.size()) >= s.epochs) {
            complete.push_back(std::move(r));
        } else {
            torn = true;
        }
    }

    std::vector<RunTask> all = grid_tasks(s);
    std::vector<RunTask> todo;
    for (const RunTask& t : all) {
        bool done = false;
        for (const RunRecord& r : complete)
            if (r.model == t.model && r.size == t.size && r.rep == t.rep) {
                done = true;
                break;
            }
        if (!done) todo.push_back(t);
    }

    std::ofstream out;
    const std::uint64_t fhash = finger_code_hash(fingers);
    if (!have_file || torn) {
        out.open(s.records_path, std::ios::trunc);
        if (!out) throw DataMissing("cannot open records file for writing: " + s.records_path);
        write_records_preamble(out, s, fhash);
        for (const RunRecord& r : complete) append_run_record(out, r);
    } else {
        out.open(s.records_path, std::ios::app);
        if (!out) throw DataMissing("cannot open records file for append: " + s.records_path);
    }

    const std::size_t n = todo.size();
    std::vector<std::optional<RunRecord>> results(n);
    std::vector<char> ready(n, 0);
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;

    const std::size_t workers = std::size_t(std::min<long long>(s.jobs, (long long)(std::max<std::size_t>(n, 1))));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    RunRecord r = run_one(s, train_full, test, fingers, fixed_link, todo[i]);
                    std::lock_guard<std::mutex> lk(mu);
                    results[i] = std::move(r);
                    ready[i] = 1;
                } catch (...) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (!first_error) first_error = std::current_exception();
                    ready[i] = 1;
                }
                cv.notify_all();
            }
        });
    }

    RecordsData data;
    data.runs = std::move(complete);
    data.config_hash = s.hash();
    data.finger_hash = fhash;
    data.has_config_hash = true;
    for (std::size_t i = 0; i < n; ++i) {
        std::unique_lock<std::mutex> lk(mu);
        cv.wait(lk, [&] { return ready[i] != 0; });
        if (first_error) break;
        RunRecord r = std::move(*results[i]);
        results[i].reset();
        lk.unlock();
        append_run_record(out, r);
        data.runs.push_back(std::move(r));
        if (!quiet) {
            const RunRecord& done = data.runs.back();
            std::fprintf(stderr, "[%zu/%zu] %s size=%zu rep=%lld test=%.4f whole=%.4f (%.1fs)\n",
                         data.runs.size(), all.size(), variant_name(done.model).c_str(), done.size,
                         done.rep, done.epochs.back().test_acc, done.epochs.back().whole_acc,
                         done.wall_seconds);
        }
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return data;
}

} // namespace embodied
