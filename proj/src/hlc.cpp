#include "facetell/hlc.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "facetell/csv.hpp"
#include "facetell/error.hpp"

namespace facetell::hlc {
namespace {

void check_index(std::span<const UnifiedLabel> labels, int t) {
    if (t < 1 || static_cast<std::size_t>(t) > labels.size()) {
        throw DomainError("time index " + std::to_string(t) + " outside 1.." + std::to_string(labels.size()));
    }
}

}  // namespace

void validate(const HlcParams& p) {
    if (!(p.sigma_s >= 0.5 && p.sigma_s < 1.0)) throw DomainError("sigma_s must lie in [0.5, 1)");
    if (p.t_s < 1) throw DomainError("T_s must be >= 1");
    if (!(p.sigma_e > 0.0 && p.sigma_e <= 0.5)) throw DomainError("sigma_e must lie in (0, 0.5]");
    if (p.t_e < 0) throw DomainError("T_e must be >= 0");
}

int count_label(UnifiedLabel label, std::span<const UnifiedLabel> segment) {
    return static_cast<int>(std::count(segment.begin(), segment.end(), label));
}

bool start_of_step(std::span<const UnifiedLabel> labels, int t, const HlcParams& params) {
    check_index(labels, t);
    const UnifiedLabel current = labels[static_cast<std::size_t>(t - 1)];
    if (!current.known()) return false;
    const std::size_t begin = static_cast<std::size_t>(t - 1);
    const std::size_t len = std::min(static_cast<std::size_t>(params.t_s), labels.size() - begin);
    const int hits = count_label(current, labels.subspan(begin, len));
    return static_cast<double>(hits) / static_cast<double>(len) >= params.sigma_s;
}

bool end_of_step(std::span<const UnifiedLabel> labels, UnifiedLabel step_label, int t, const HlcParams& params) {
    check_index(labels, t);
    const std::size_t begin = static_cast<std::size_t>(t - 1);
    const std::size_t max_tau = std::min(static_cast<std::size_t>(params.t_e), labels.size() - begin - 1);
    int hits = 0;
    for (std::size_t tau = 0; tau <= max_tau; ++tau) {
        hits += labels[begin + tau] == step_label;
        if (static_cast<double>(hits) / static_cast<double>(tau + 1) >= params.sigma_e) return false;
    }
    return true;
}

std::vector<UnifiedLabel> correct_labels(std::span<const UnifiedLabel> labels, const HlcParams& params) {
    validate(params);
    const int total = static_cast<int>(labels.size());
    std::vector<UnifiedLabel> out(labels.size(), UnifiedLabel::unknown());
    int t = 1;
    while (t <= total) {
        if (!start_of_step(labels, t, params)) {
            ++t;  // stays UNKNOWN
            continue;
        }
        const UnifiedLabel step = labels[static_cast<std::size_t>(t - 1)];
        out[static_cast<std::size_t>(t - 1)] = step;
        ++t;
        while (t <= total && !end_of_step(labels, step, t, params)) {
            out[static_cast<std::size_t>(t - 1)] = step;
            ++t;
        }
        // On an end the same t is re-tested for a new start.
    }
    return out;
}

LabelSequence correct_labels(const LabelSequence& sequence, const HlcParams& params) {
    if (!(sequence.timestep > 0.0)) throw DomainError("timestep must be > 0");
    return {correct_labels(sequence.labels, params), sequence.timestep};
}

std::vector<SweepRow> sweep_params(std::span<const UnifiedLabel> labels, std::span<const UnifiedLabel> truth,
                                   std::span<const HlcParams> grid) {
    if (labels.size() != truth.size()) throw DomainError("predicted and true sequences differ in length");
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (const auto& p : grid) {
        const auto corrected = correct_labels(labels, p);
        rows.push_back({p, classifier::accuracy(corrected, truth)});
    }
    return rows;
}

std::vector<HlcParams> default_sweep_grid() {
    std::vector<HlcParams> grid;
    for (double ss : {0.6, 0.7, 0.8, 0.9}) {
        for (int ts : {4, 6, 8, 10}) {
            for (double se : {0.1, 0.2, 0.3, 0.4}) {
                for (int te : {4, 6, 8, 10}) grid.push_back({ss, ts, se, te});
            }
        }
    }
    return grid;
}

void write_sequence(std::ostream& out, std::span<const UnifiedLabel> labels) {
    out << "t,label_index\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i].index << '\n';
}

void write_sequence(const std::filesystem::path& path, std::span<const UnifiedLabel> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_sequence(out, labels);
}

std::vector<UnifiedLabel> read_sequence(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::size_t t_col = table.column("t");
    const std::size_t l_col = table.column("label_index");
    std::vector<std::pair<long long, UnifiedLabel>> rows;
    for (const auto& r : table.rows) {
        const long long label = csv::to_int(r[l_col]);
        if (label < UnifiedLabel::kUnknown) throw IoError("label index " + r[l_col] + " is invalid");
        rows.emplace_back(csv::to_int(r[t_col]), UnifiedLabel{static_cast<int>(label)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<UnifiedLabel> labels;
    for (const auto& r : rows) labels.push_back(r.second);
    return labels;
}

void write_sweep(std::ostream& out, std::span<const SweepRow> rows) {
    out << "sigma_s,T_s,sigma_e,T_e,accuracy\n";
    for (const auto& r : rows) {
        out << csv::format(r.params.sigma_s) << ',' << r.params.t_s << ',' << csv::format(r.params.sigma_e) << ','
            << r.params.t_e << ',' << csv::format(r.accuracy) << '\n';
    }
}

}  // namespace facetell::hlc
