#pragma once

// End-to-end runs of the two experiments: generate data, train, evaluate,
// attribute, and write plot-ready CSV.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fslab/case1.h"
#include "fslab/case2.h"
#include "fslab/diagnostics.h"
#include "fslab/network.h"

namespace fslab {

// Random streams split off a user seed with derive_seed(seed, stream, index).
enum Stream : std::uint64_t {
  kDataStream = 1,
  kInitStream = 2,
  kShuffleStream = 3,
  kTestStream = 4,
};

// ------------------------------------------------------------ experiment 1

struct Exp1NetSpec {
  std::string name;
  std::size_t r = 0;
  case1::Lift lift = case1::Lift::kDelta;
  std::size_t batch = 50;
};

// Psi1..Psi4 on T_delta^7 (batch 7), T_0^5000, T_delta^5000 and the
// 10000-sample set with the given lift (batch 50).
std::vector<Exp1NetSpec> default_exp1_nets(case1::Lift fourth_lift = case1::Lift::kZero);

struct Exp1Config {
  case1::Problem problem;
  std::vector<Exp1NetSpec> nets = default_exp1_nets();
  std::size_t epochs = 30000;
  std::size_t grid_n = 2000;
  double threshold = 0.9;
  std::uint64_t seed = 1;
};

struct Exp1NetResult {
  Exp1NetSpec spec;
  std::vector<int> pred_c0;
  std::vector<int> pred_cdelta;
  diagnostics::AttributionVerdict attribution;
  // Mean over the epoch's batches of the per-batch mean cross-entropy.
  std::vector<double> epoch_loss;
  // Summed cross-entropy of the final network over its whole training set.
  double final_loss_sum = 0.0;
  // Flip rates on the S_eps grid: x2 := 0 applied to C_delta, x2 := delta
  // applied to C_0.
  diagnostics::ProbeResult zero_x2;
  diagnostics::ProbeResult add_delta;
  Network net;
};

struct Exp1Report {
  Exp1Config config;
  case1::DiagnosticSets sets;
  std::vector<Exp1NetResult> nets;
};

// Validates the problem, then trains every network in turn. on_net, when
// set, sees each result as soon as it is ready. DivergedError propagates.
Exp1Report run_experiment_1(const Exp1Config& config,
                            const std::function<void(const Exp1NetResult&)>& on_net = {});

// set,x1,x2,f_a,prediction_<name>...,in_S_eps
void write_exp1_predictions(std::ostream& out, const Exp1Report& report);
// One row per network with verdict, agreements and probe flip rates.
void write_exp1_summary(std::ostream& out, const Exp1Report& report);
// epoch,mean_batch_loss
void write_loss_history(std::ostream& out, const std::vector<double>& epoch_loss);

// ------------------------------------------------------------ experiment 2

struct Exp2Row {
  double b = 0.0;
  double c = 0.0;
};

std::vector<Exp2Row> default_exp2_rows();

struct Exp2Config {
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<Exp2Row> rows = default_exp2_rows();
  std::size_t n_test = 1000;
  std::uint64_t test_seed = 2019;
  std::size_t epochs = 10;
  std::size_t batch = 60;
  double train_a = 0.01;
  bool relu_between_dense = false;
};

struct Exp2Score {
  double b = 0.0;
  double c = 0.0;
  std::uint64_t seed = 0;
  double acc_tilde = 0.0;
  double acc_hat = 0.0;
  double acc_g_tilde = 0.0;
  double acc_g_hat = 0.0;
};

struct Exp2SeedResult {
  std::uint64_t seed = 0;
  std::vector<Exp2Score> scores;  // one per row
  std::vector<double> epoch_loss;
  // Family swap on the tilde test set of the first row.
  diagnostics::ProbeResult family_swap;
  Network net;
};

struct Exp2Report {
  Exp2Config config;
  std::vector<Exp2SeedResult> seeds;
  // Index into seeds of the run closest to 100% / 0% on the first row.
  std::size_t best = 0;
};

// The test sets depend only on test_seed, so every seed is scored on the
// same images.
std::vector<case2::LabeledImage> exp2_test_set(const Exp2Config& config, std::size_t row,
                                               case2::Family family);

Exp2Report run_experiment_2(const Exp2Config& config,
                            const std::function<void(const Exp2SeedResult&)>& on_seed = {});

// b,c,seed,acc_tilde,acc_hat,acc_g_tilde,acc_g_hat for every seed and row.
void write_exp2_table(std::ostream& out, const Exp2Report& report);
// Same columns, best seed only.
void write_exp2_best(std::ostream& out, const Exp2Report& report);

}  // namespace fslab
