#pragma once

#include <string>
#include <vector>

#include "day_tensor.hpp"
#include "slot_model.hpp"

namespace gdlm {

inline constexpr int kModelSchemaVersion = 1;

/// Everything produced by training: per-slot transitions and hyperparameters,
/// graph and normalization metadata. Immutable once built.
struct TrainedModel {
    int T = 0;                      // slots per day
    int ts_minutes = 0;
    bool wrap = true;               // transition T-1 -> next day's slot 0 present
    std::vector<std::string> sensor_ids;
    NormStats norm;
    double kappa = 0.0;
    double sigma = 0.0;
    double epsilon = 0.0;
    std::vector<double> taus;
    std::vector<SlotModel> slots;   // index t maps slot t to slot t+1
    std::vector<unsigned char> slot_converged;  // byte-sized for lock-free parallel fill
    std::vector<int> slot_iterations;
    std::vector<std::string> train_day_labels;

    int N() const { return static_cast<int>(sensor_ids.size()); }
    int n_slots() const { return static_cast<int>(slots.size()); }
    int K() const { return static_cast<int>(taus.size()); }
    bool has_transition(int slot_of_day) const {
        return slot_of_day >= 0 && (slot_of_day < T - 1 || (wrap && slot_of_day == T - 1));
    }
};

} // namespace gdlm
