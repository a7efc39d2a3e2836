#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "costwise/circuit.hpp"
#include "costwise/solver.hpp"

namespace costwise {

/// One patient's stay: uniform-length windows of feature values. Positives
/// carry the onset index and store only pre-onset windows (the early-warning
/// setting scores a patient before the event).
struct PatientRecord {
    std::string id;
    Eigen::MatrixXd windows;             // rows = windows, cols = cohort features
    std::optional<int> event_time;       // onset window index == number of stored windows
};

struct Cohort {
    std::vector<PatientRecord> patients;
    std::vector<std::string> features;   // circuit layer-1 ids, sorted
    int horizon = 6;                     // windows standing in for the 48-hour horizon
    std::uint64_t seed = 0;
    std::map<std::string, double> beta_star;  // planted ground truth, not serialized
    double noise = 0.0;

    /// Window label: positive iff the event falls within the next `horizon`
    /// windows.
    bool label(const PatientRecord& p, int window) const {
        return p.event_time && *p.event_time - window <= horizon;
    }
};

struct GenOptions {
    int n_pos = 300;
    int n_neg = 1700;
    int horizon_windows = 6;             // stand-in for 48 hours; window width unstated upstream
    int min_windows = 12;
    int max_windows = 24;
    double persistence = 0.85;           // AR(1) coefficient of the latent trajectory
    double noise = 0.5;                  // feature observation noise
    double hazard_bias = -4.2;
    double hazard_scale = 0.8;
    double frailty_sd = 0.6;
    double ramp = 2.8;                   // latent risk rise over the horizon before onset
    bool routine_only_signal = false;    // plant beta* only on zero-cost features
    std::uint64_t seed = 0;
};

/// Synthetic cohort over the circuit's features: AR(1) latent risk per
/// patient, event hazard sigma(alpha_i + s * z_t), rejection sampling until
/// exactly n_pos/n_neg patients. beta* is planted on features spanning cheap
/// and expensive ways so cost-aware and cost-blind selection differ.
Cohort generate(const CostCircuit& circuit, const GenOptions& opts);
Cohort generate(const CostCircuit& circuit, int n_pos, int n_neg, int horizon_windows,
                std::uint64_t seed);

/// Patient-level split; both halves keep the stratified class ratio.
std::pair<Cohort, Cohort> split(const Cohort& cohort, double train_frac = 0.75,
                                std::uint64_t seed = 0);

/// All labeled windows, negatives subsampled to the positive count
/// (balanced 1:1). Row order is deterministic. Errors when no positive
/// window exists.
Dataset make_training_set(const Cohort& cohort, std::uint64_t seed);

/// CSV round-trip. Header: patient_id,window_index,event_time,label,
/// then one column per feature. event_time is empty for negatives; doubles
/// are printed with 17 significant digits (lossless).
std::string cohort_to_csv(const Cohort& cohort);
Cohort parse_cohort_csv(const std::string& text, int horizon = 6);
void save_cohort_csv(const std::string& path, const Cohort& cohort);
Cohort load_cohort_csv(const std::string& path, int horizon = 6);

}  // namespace costwise
