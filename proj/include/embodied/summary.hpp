#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "records.hpp"
#include "stats.hpp"
#include "svg.hpp"

namespace embodied {

struct SummaryRow {
    std::size_t size = 0;
    long long epoch = 1;
    Variant model = Variant::Baseline;
    double mean = 0.0;
    double stdev = 0.0;
    std::optional<ComparisonStat> vs_embodied; // absent for the embodied row itself
};

struct CurveTable {
    std::size_t size = 0;
    // curves[model] -> per-epoch means
    std::map<std::string, std::vector<EpochRow>> by_model;
};

struct SummaryResult {
    std::vector<SummaryRow> whole_db; // accuracy over the union of train subset and test set
    std::vector<SummaryRow> test_set; // accuracy over the held-out test set
    std::vector<CurveTable> curves;
    std::vector<std::string> monotonicity_notes;
};

namespace detail {

inline std::vector<double> sample_at(const RecordsData& data, std::size_t size, Variant m,
                                     long long reps, long long epoch, bool whole) {
    std::vector<double> xs;
    xs.reserve(std::size_t(reps));
    for (long long rep = 0; rep < reps; ++rep) {
        const RunRecord* r = data.find(m, size, rep);
        if (!r || (long long)(r->epochs.size()) < epoch)
            throw IncompleteGrid("missing " + variant_name(m) + " size " + std::to_string(size) +
                                 " rep " + std::to_string(rep) + " epoch " + std::to_string(epoch));
        const EpochRow& row = r->epochs[std::size_t(epoch - 1)];
        xs.push_back(whole ? row.whole_acc : row.test_acc);
    }
    return xs;
}

} // namespace detail

// Per size and epoch point, mean/stdev per model plus Welch p and Cohen's d
// against the embodied sample. Pure function of records.
inline SummaryResult summarize(const RecordsData& data, const Settings& s) {
    SummaryResult result;
    const bool have_embodied =
        std::find(s.models.begin(), s.models.end(), Variant::Embodied) != s.models.end();
    const std::vector<long long> epoch_points =
        s.epochs > 1 ? std::vector<long long>{1, s.epochs} : std::vector<long long>{1};

    for (const bool whole : {true, false}) {
        std::vector<SummaryRow>& rows = whole ? result.whole_db : result.test_set;
        for (std::size_t size : s.sizes) {
            for (long long epoch : epoch_points) {
                std::vector<double> emb;
                if (have_embodied)
                    emb = detail::sample_at(data, size, Variant::Embodied, s.repetitions, epoch, whole);
                for (Variant m : s.models) {
                    std::vector<double> xs =
                        m == Variant::Embodied
                            ? emb
                            : detail::sample_at(data, size, m, s.repetitions, epoch, whole);
                    SummaryRow row;
                    row.size = size;
                    row.epoch = epoch;
                    row.model = m;
                    const SampleStats st = SampleStats::of(xs);
                    row.mean = st.mean;
                    row.stdev = st.stdev();
                    if (m != Variant::Embodied && have_embodied)
                        row.vs_embodied = compare_samples(xs, emb, s.alpha);
                    rows.push_back(std::move(row));
                }
            }
        }
    }

    for (std::size_t size : s.sizes) {
        CurveTable ct;
        ct.size = size;
        for (Variant m : s.models) {
            std::vector<EpochRow> mean_curve(std::size_t(s.epochs));
            for (long long rep = 0; rep < s.repetitions; ++rep) {
                const RunRecord* r = data.find(m, size, rep);
                if (!r || (long long)(r->epochs.size()) < s.epochs)
                    throw IncompleteGrid("missing curve for " + variant_name(m) + " size " +
                                         std::to_string(size) + " rep " + std::to_string(rep));
                for (std::size_t e = 0; e < std::size_t(s.epochs); ++e) {
                    mean_curve[e].train_acc += r->epochs[e].train_acc;
                    mean_curve[e].test_acc += r->epochs[e].test_acc;
                    mean_curve[e].whole_acc += r->epochs[e].whole_acc;
                    mean_curve[e].loss += r->epochs[e].loss;
                }
            }
            for (EpochRow& row : mean_curve) {
                row.train_acc /= double(s.repetitions);
                row.test_acc /= double(s.repetitions);
                row.whole_acc /= double(s.repetitions);
                row.loss /= double(s.repetitions);
            }
            ct.by_model[variant_name(m)] = std::move(mean_curve);
        }
        result.curves.push_back(std::move(ct));
    }

    // Monotone grid note: mean final-epoch test accuracy should be
    // non-decreasing in training size (slack 0.005) below the full database.
    for (Variant m : s.models) {
        double prev = -1.0;
        std::size_t prev_size = 0;
        for (std::size_t size : s.sizes) {
            if (size > 6400) continue;
            std::vector<double> xs =
                detail::sample_at(data, size, m, s.repetitions, s.epochs, false);
            const double mean = SampleStats::of(xs).mean;
            if (prev >= 0.0 && mean < prev - 0.005) {
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "%s: final-epoch test accuracy drops from %.4f (size %zu) to %.4f (size %zu)",
                              variant_name(m).c_str(), prev, prev_size, mean, size);
                result.monotonicity_notes.emplace_back(buf);
            }
            prev = mean;
            prev_size = size;
        }
    }
    return result;
}

namespace detail {

inline std::string acc3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline void write_table_csv(const std::string& path, const std::vector<SummaryRow>& rows,
                            const Settings& s, const char* metric) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataMissing("cannot write " + path);
    f << "# metric=" << metric << '\n';
    std::istringstream cfg(s.serialize());
    std::string line;
    while (std::getline(cfg, line)) f << "# " << line << '\n';
    f << "size,epoch,model,mean,stdev,d,p,significant\n";
    char buf[64];
    for (const SummaryRow& r : rows) {
        f << r.size << ',' << r.epoch << ',' << variant_name(r.model) << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.mean);
        f << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.stdev);
        f << buf << ',';
        if (r.vs_embodied) {
            if (r.vs_embodied->degenerate) {
                f << "degenerate,";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", r.vs_embodied->d);
                f << buf << ',';
            }
            std::snprintf(buf, sizeof buf, "%.17g", r.vs_embodied->p);
            f << buf << ',' << (r.vs_embodied->significant ? 1 : 0) << '\n';
        } else {
            f << ",,\n";
        }
    }
}

} // namespace detail

inline void write_summary_files(const SummaryResult& result, const Settings& s) {
    std::filesystem::create_directories(s.out_dir);
    const std::filesystem::path out(s.out_dir);
    detail::write_table_csv((out / "table_whole_db.csv").string(), result.whole_db, s,
                            "whole_database_accuracy");
    detail::write_table_csv((out / "table_test_set.csv").string(), result.test_set, s,
                            "test_set_accuracy");

    for (const CurveTable& ct : result.curves) {
        const std::string base = "curves_" + std::to_string(ct.size);
        std::ofstream f(out / (base + ".csv"), std::ios::trunc);
        if (!f) throw DataMissing("cannot write curve csv for size " + std::to_string(ct.size));
        f << "epoch,model,train_acc,test_acc,whole_acc,loss\n";
        char buf[64];
        for (const auto& [model, curve] : ct.by_model) {
            for (std::size_t e = 0; e < curve.size(); ++e) {
                f << (e + 1) << ',' << model << ',';
                std::snprintf(buf, sizeof buf, "%.17g", curve[e].train_acc);
                f << buf << ',';
                std::snprintf(buf, sizeof buf, "%.17g", curve[e].test_acc);
                f << buf << ',';
                std::snprintf(buf, sizeof buf, "%.17g", curve[e].whole_acc);
                f << buf << ',';
                std::snprintf(buf, sizeof buf, "%.17g", curve[e].loss);
                f << buf << '\n';
            }
        }

        CurvePanel whole_panel{"whole database, size " + std::to_string(ct.size), {}};
        CurvePanel test_panel{"testing set, size " + std::to_string(ct.size), {}};
        std::vector<CurveSeries> legend;
        for (const auto& [model, curve] : ct.by_model) {
            CurveSeries ws{model, curve_color(model), {}};
            CurveSeries ts{model, curve_color(model), {}};
            for (const EpochRow& row : curve) {
                ws.values.push_back(row.whole_acc);
                ts.values.push_back(row.test_acc);
            }
            legend.push_back(CurveSeries{model, curve_color(model), {}});
            whole_panel.series.push_back(std::move(ws));
            test_panel.series.push_back(std::move(ts));
        }
        std::ofstream svg(out / (base + ".svg"), std::ios::trunc);
        if (!svg) throw DataMissing("cannot write curve svg for size " + std::to_string(ct.size));
        svg << render_curves_svg({whole_panel, test_panel}, legend);
    }
}

// Human-readable mirror of the two tables for stdout.
inline std::string render_summary_text(const SummaryResult& result, const Settings& s) {
    std::ostringstream o;
    const auto table = [&o, &s](const char* title, const std::vector<SummaryRow>& rows) {
        o << title << '\n';
        o << "  size  epoch  model       mean    std      d        p\n";
        for (const SummaryRow& r : rows) {
            char line[160];
            std::string d = "-", p = "-", star;
            if (r.vs_embodied) {
                char buf[40];
                if (r.vs_embodied->degenerate) {
                    d = "degenerate";
                } else {
                    std::snprintf(buf, sizeof buf, "%8.3f", r.vs_embodied->d);
                    d = buf;
                }
                std::snprintf(buf, sizeof buf, "%.2e", r.vs_embodied->p);
                p = buf;
                if (r.vs_embodied->significant) star = " *";
            }
            std::snprintf(line, sizeof line, "  %-6zu %-6lld %-10s %6.3f  %6.3f  %-9s %s%s\n", r.size,
                          r.epoch, variant_name(r.model).c_str(), r.mean, r.stdev, d.c_str(), p.c_str(),
                          star.c_str());
            o << line;
        }
        o << '\n';
    };
    table("Accuracy on the whole database (training plus testing examples):", result.whole_db);
    table("Accuracy on the testing set:", result.test_set);
    if (!result.monotonicity_notes.empty()) {
        o << "Monotonicity notes:\n";
        for (const std::string& n : result.monotonicity_notes) o << "  " << n << '\n';
    }
    o << "(significance level alpha=" << s.alpha << "; '*' marks p<alpha vs the embodied sample)\n";
    return o.str();
}

} // namespace embodied
