#include "costwise/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "costwise/dnf.hpp"
#include "costwise/rng.hpp"

namespace costwise {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// Cheapest way of each feature by total SUM-channel cost, with the paid
// selection-layer nodes that way uses. A zero floor means the feature rides
// on routine (cost-free) tests.
struct FeatureFloor {
    double cost = 0.0;
    std::vector<std::string> paid_tests;  // positive-cost selection nodes of the cheapest way
};

std::map<std::string, FeatureFloor> feature_floor_costs(const CostCircuit& circuit,
                                                        const ThreeLayerForm& form) {
    std::map<std::string, FeatureFloor> out;
    for (const auto& f : form.features) {
        double best = std::numeric_limits<double>::infinity();
        const Way* best_way = nullptr;
        for (const Way* w : form.ways_of(f)) {
            double sum = 0.0;
            for (const auto& [channel, nodes] : w->channel_usage)
                for (const auto& id : nodes) sum += circuit.node(id).costs.at(channel);
            if (sum < best) {
                best = sum;
                best_way = w;
            }
        }
        FeatureFloor floor;
        floor.cost = best;
        for (const auto& id : best_way->selection_nodes) {
            double node_cost = 0.0;
            for (const auto& [channel, value] : circuit.node(id).costs) node_cost += value;
            if (node_cost > 0.0) floor.paid_tests.push_back(id);
        }
        out[f] = floor;
    }
    return out;
}

// Planted truth: weights beta* plus how strongly each planted feature
// expresses the pre-onset deterioration. Expensive features see the ramp
// harder than free ones, so paid tests buy a real (but bounded) AUC margin.
struct Planting {
    std::map<std::string, double> beta;
    std::map<std::string, double> ramp_weight;
};

Planting plant_beta_star(const CostCircuit& circuit, bool routine_only) {
    ThreeLayerForm form = reduce(circuit);
    auto floors = feature_floor_costs(circuit, form);
    Planting plant;
    if (routine_only) {
        for (const auto& [f, floor] : floors)
            if (floor.cost == 0.0) {
                plant.beta[f] = 1.0;
                plant.ramp_weight[f] = 1.0;
            }
        if (plant.beta.empty())
            throw error("generate: routine-only signal needs a zero-cost feature");
        return plant;
    }
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [f, floor] : floors) ranked.emplace_back(floor.cost, f);
    std::sort(ranked.begin(), ranked.end());

    // Three tiers. Cheap tier: the signal obtainable for free. Expensive
    // tier: the two priciest features, expressing the deterioration hardest.
    // Medium tier: a diffuse band spread across single-test features, up to
    // three per test; rewarding selections that share tests.
    int cheap = 0;
    for (const auto& [c, f] : ranked) {
        if (cheap == 3) break;
        plant.beta[f] = 1.0;
        plant.ramp_weight[f] = 0.78;
        ++cheap;
    }
    int expensive = 0;
    for (auto it = ranked.rbegin(); it != ranked.rend() && expensive < 2; ++it) {
        if (plant.beta.count(it->second)) continue;
        plant.beta[it->second] = 0.45;
        plant.ramp_weight[it->second] = 0.9;
        ++expensive;
    }
    // Round-robin over the single-test buckets (cheapest test first) so the
    // medium band touches many panels with a few features each.
    std::map<std::string, std::vector<std::string>> buckets;
    for (const auto& [c, f] : ranked) {
        if (plant.beta.count(f) || c == 0.0) continue;
        const auto& paid = floors.at(f).paid_tests;
        if (paid.size() == 1) buckets[paid[0]].push_back(f);
    }
    std::vector<std::string> bucket_order;
    for (const auto& [t, fs] : buckets) bucket_order.push_back(t);
    std::sort(bucket_order.begin(), bucket_order.end(),
              [&](const std::string& a, const std::string& b) {
                  double ca = floors.at(buckets[a][0]).cost, cb = floors.at(buckets[b][0]).cost;
                  return std::tie(ca, a) < std::tie(cb, b);
              });
    int medium = 0;
    for (std::size_t slot = 0; slot < 3 && medium < 15; ++slot)
        for (const auto& t : bucket_order) {
            if (medium == 15) break;
            if (slot >= buckets[t].size()) continue;
            const std::string& f = buckets[t][slot];
            plant.beta[f] = 0.5;
            plant.ramp_weight[f] = 1.0;
            ++medium;
        }
    return plant;
}

}  // namespace

Cohort generate(const CostCircuit& circuit, const GenOptions& opts) {
    if (opts.n_pos < 0 || opts.n_neg < 0 || opts.n_pos + opts.n_neg == 0)
        throw error("generate: patient counts must be nonnegative and not both zero");
    if (opts.min_windows < 4 || opts.max_windows < opts.min_windows)
        throw error("generate: window range must satisfy 4 <= min <= max");

    Cohort cohort;
    cohort.features = circuit.feature_ids();
    if (cohort.features.empty()) throw error("generate: circuit has no features");
    cohort.horizon = opts.horizon_windows;
    cohort.seed = opts.seed;
    cohort.noise = opts.noise;
    Planting plant = plant_beta_star(circuit, opts.routine_only_signal);
    cohort.beta_star = plant.beta;

    std::vector<double> loads, rampw;
    for (const auto& f : cohort.features) {
        auto it = plant.beta.find(f);
        loads.push_back(it == plant.beta.end() ? 0.0 : it->second);
        auto rw = plant.ramp_weight.find(f);
        rampw.push_back(rw == plant.ramp_weight.end() ? 0.0 : rw->second);
    }

    // The hazard acts on the observed risk score x'beta*, standardized to
    // unit variance so hazard_scale means the same thing for any planting.
    // With x_j = beta*_j z + noise eps_j, Var(x'beta*) = (sum beta*^2)^2 +
    // noise^2 sum beta*^2.
    double bb = 0.0;
    for (double l : loads) bb += l * l;
    const double score_sd = std::sqrt(bb * bb + opts.noise * opts.noise * bb);
    if (score_sd <= 0.0) throw error("generate: planted beta* is empty");

    Rng rng(opts.seed);
    const std::size_t F = cohort.features.size();
    const int R = opts.horizon_windows;  // deterioration ramp spans the label horizon

    // One stay of `T` windows: AR(1) latent risk, plus (positives) a linear
    // deterioration ramp over the `R` windows before the planned onset. The
    // returned value is the observed risk score of the last window.
    auto simulate = [&](int T, int onset, Eigen::MatrixXd& rows) {
        double zt = rng.normal();
        double last_score = 0.0;
        for (int t = 0; t < T; ++t) {
            if (t > 0)
                zt = opts.persistence * zt +
                     std::sqrt(1.0 - opts.persistence * opts.persistence) * rng.normal();
            double ramp_t = 0.0;
            if (onset >= 0) {
                const int to_onset = onset - 1 - t;  // 0 at the last pre-onset window
                if (to_onset < R)
                    ramp_t = opts.ramp * (1.0 - std::max(to_onset, 0) / static_cast<double>(R));
            }
            double score = 0.0;
            for (std::size_t j = 0; j < F; ++j) {
                const double x =
                    loads[j] * (zt + rampw[j] * ramp_t) + opts.noise * rng.normal();
                rows(t, static_cast<Eigen::Index>(j)) = x;
                score += loads[j] * x;
            }
            last_score = score;
        }
        return last_score / score_sd;
    };

    long attempts = 0;
    const long attempt_cap = 1000L * (opts.n_pos + opts.n_neg + 1);
    auto tick = [&] {
        if (++attempts > attempt_cap)
            throw error("generate: rejection sampling failed to reach the requested counts");
    };

    // Positives: the event hazard is evaluated once, at the deteriorated
    // state just before the planned onset; unfired attempts are discarded
    // (their trajectories carry a ramp, so they cannot serve as controls).
    for (int got = 0; got < opts.n_pos;) {
        tick();
        const int T = static_cast<int>(rng.integer(opts.min_windows, opts.max_windows));
        const int onset = static_cast<int>(rng.integer(4, T));
        const double alpha = opts.hazard_bias + opts.frailty_sd * rng.normal();
        Eigen::MatrixXd rows(onset, static_cast<Eigen::Index>(F));
        const double s = simulate(onset, onset, rows);
        if (rng.uniform() >= sigmoid(alpha + opts.hazard_scale * s)) continue;
        PatientRecord p;
        p.windows = std::move(rows);
        p.event_time = onset;
        p.id = "pos_" + std::to_string(++got);
        cohort.patients.push_back(std::move(p));
    }

    // Negatives: no deterioration, kept only if the hazard never fires along
    // the way. The stay is truncated at a discharge drawn from the same law
    // as the positives' onset so window counts carry no class signal.
    for (int got = 0; got < opts.n_neg;) {
        tick();
        const int T = static_cast<int>(
            rng.integer(4, rng.integer(opts.min_windows, opts.max_windows)));
        const double alpha = opts.hazard_bias + opts.frailty_sd * rng.normal();
        Eigen::MatrixXd rows(T, static_cast<Eigen::Index>(F));
        bool fired = false;
        double zt = rng.normal();
        for (int t = 0; t < T && !fired; ++t) {
            if (t > 0)
                zt = opts.persistence * zt +
                     std::sqrt(1.0 - opts.persistence * opts.persistence) * rng.normal();
            double score = 0.0;
            for (std::size_t j = 0; j < F; ++j) {
                const double x = loads[j] * zt + opts.noise * rng.normal();
                rows(t, static_cast<Eigen::Index>(j)) = x;
                score += loads[j] * x;
            }
            fired = rng.uniform() < sigmoid(alpha + opts.hazard_scale * score / score_sd);
        }
        if (fired) continue;
        PatientRecord p;
        p.windows = std::move(rows);
        p.id = "neg_" + std::to_string(++got);
        cohort.patients.push_back(std::move(p));
    }
    return cohort;
}

Cohort generate(const CostCircuit& circuit, int n_pos, int n_neg, int horizon_windows,
                std::uint64_t seed) {
    GenOptions opts;
    opts.n_pos = n_pos;
    opts.n_neg = n_neg;
    opts.horizon_windows = horizon_windows;
    opts.seed = seed;
    return generate(circuit, opts);
}

std::pair<Cohort, Cohort> split(const Cohort& cohort, double train_frac, std::uint64_t seed) {
    if (cohort.patients.empty()) throw error("split: empty cohort");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw error("split: train fraction must lie in (0, 1)");

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        (cohort.patients[i].event_time ? pos : neg).push_back(i);

    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);
    auto take = [&](std::vector<std::size_t>& v) {
        auto n = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(v.size())));
        n = std::min(n, v.size());
        return n;
    };
    std::set<std::size_t> train_idx(pos.begin(), pos.begin() + static_cast<long>(take(pos)));
    train_idx.insert(neg.begin(), neg.begin() + static_cast<long>(take(neg)));

    Cohort train = cohort, test = cohort;
    train.patients.clear();
    test.patients.clear();
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        (train_idx.count(i) ? train : test).patients.push_back(cohort.patients[i]);
    return {std::move(train), std::move(test)};
}

Dataset make_training_set(const Cohort& cohort, std::uint64_t seed) {
    struct Row {
        std::size_t patient, window;
    };
    std::vector<Row> pos, neg;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
        const auto& p = cohort.patients[i];
        for (Eigen::Index w = 0; w < p.windows.rows(); ++w)
            (cohort.label(p, static_cast<int>(w)) ? pos : neg)
                .push_back({i, static_cast<std::size_t>(w)});
    }
    if (pos.empty()) throw error("make_training_set: no positive windows");
    if (neg.empty()) throw error("make_training_set: no negative windows");

    Rng rng(seed);
    const std::size_t k = std::min(pos.size(), neg.size());
    auto subsample = [&](std::vector<Row>& v) {
        if (v.size() <= k) return;
        rng.shuffle(v);
        v.resize(k);
        std::sort(v.begin(), v.end(), [](const Row& a, const Row& b) {
            return a.patient != b.patient ? a.patient < b.patient : a.window < b.window;
        });
    };
    subsample(pos);
    subsample(neg);

    Dataset out;
    out.columns = cohort.features;
    out.X.resize(static_cast<Eigen::Index>(2 * k), static_cast<Eigen::Index>(cohort.features.size()));
    out.y.resize(static_cast<Eigen::Index>(2 * k));
    Eigen::Index r = 0;
    for (const auto* rows : {&pos, &neg}) {
        for (const Row& row : *rows) {
            out.X.row(r) = cohort.patients[row.patient].windows.row(static_cast<Eigen::Index>(row.window));
            out.y(r) = rows == &pos ? 1.0 : -1.0;
            ++r;
        }
    }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string cohort_to_csv(const Cohort& cohort) {
    std::ostringstream os;
    os << "patient_id,window_index,event_time,label";
    for (const auto& f : cohort.features) {
        if (f.find_first_of(",\n\"") != std::string::npos)
            throw error("cohort csv: feature name not representable: " + f);
        os << ',' << f;
    }
    os << '\n';
    for (const auto& p : cohort.patients) {
        if (p.id.find_first_of(",\n\"") != std::string::npos)
            throw error("cohort csv: patient id not representable: " + p.id);
        for (Eigen::Index w = 0; w < p.windows.rows(); ++w) {
            os << p.id << ',' << w << ',';
            if (p.event_time) os << *p.event_time;
            os << ',' << (cohort.label(p, static_cast<int>(w)) ? 1 : 0);
            for (Eigen::Index j = 0; j < p.windows.cols(); ++j)
                os << ',' << format_double(p.windows(w, j));
            os << '\n';
        }
    }
    return os.str();
}

Cohort parse_cohort_csv(const std::string& text, int horizon) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw error("cohort csv: empty file");
    auto header = split_line(line);
    if (header.size() < 5 || header[0] != "patient_id" || header[1] != "window_index" ||
        header[2] != "event_time" || header[3] != "label")
        throw error("cohort csv: bad header");

    Cohort cohort;
    cohort.horizon = horizon;
    cohort.features.assign(header.begin() + 4, header.end());

    struct Raw {
        std::vector<std::vector<double>> rows;
        std::optional<int> event_time;
    };
    std::vector<std::pair<std::string, Raw>> patients;
    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw error("cohort csv: line " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));
        const std::string& id = cells[0];
        if (patients.empty() || patients.back().first != id) {
            if (!seen.insert(id).second)
                throw error("cohort csv: rows for patient " + id + " are not contiguous");
            patients.emplace_back(id, Raw{});
        }
        Raw& raw = patients.back().second;
        int w = std::atoi(cells[1].c_str());
        if (w != static_cast<int>(raw.rows.size()))
            throw error("cohort csv: patient " + id + " window " + cells[1] + " out of order");
        std::optional<int> et;
        if (!cells[2].empty()) et = std::atoi(cells[2].c_str());
        if (!raw.rows.empty() && et != raw.event_time)
            throw error("cohort csv: patient " + id + " has inconsistent event_time");
        raw.event_time = et;
        if (et && w >= *et)
            throw error("cohort csv: patient " + id + " has a window at or after onset");
        int label = std::atoi(cells[3].c_str());
        int expected = et && *et - w <= horizon ? 1 : 0;
        if (label != expected)
            throw error("cohort csv: patient " + id + " window " + cells[1] +
                        " label disagrees with event_time under horizon " +
                        std::to_string(horizon));
        std::vector<double> row;
        for (std::size_t j = 4; j < cells.size(); ++j)
            row.push_back(std::strtod(cells[j].c_str(), nullptr));
        raw.rows.push_back(std::move(row));
    }

    for (auto& [id, raw] : patients) {
        PatientRecord p;
        p.id = id;
        p.event_time = raw.event_time;
        p.windows.resize(static_cast<Eigen::Index>(raw.rows.size()),
                         static_cast<Eigen::Index>(cohort.features.size()));
        for (std::size_t w = 0; w < raw.rows.size(); ++w)
            for (std::size_t j = 0; j < raw.rows[w].size(); ++j)
                p.windows(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(j)) =
                    raw.rows[w][j];
        cohort.patients.push_back(std::move(p));
    }
    return cohort;
}

void save_cohort_csv(const std::string& path, const Cohort& cohort) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write cohort file: " + path);
    out << cohort_to_csv(cohort);
}

Cohort load_cohort_csv(const std::string& path, int horizon) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open cohort file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_cohort_csv(text, horizon);
}

}  // namespace costwise
