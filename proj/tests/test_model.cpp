#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "probopt/adam.hpp"
#include "probopt/datasets.hpp"
#include "probopt/derandomize.hpp"
#include "probopt/direct.hpp"
#include "probopt/mpnn.hpp"
#include "probopt/report.hpp"
#include "support.hpp"

using namespace probopt;
using namespace probopt::testing;

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam adam(2, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  std::vector<double> x{1.0, -1.0};
  const std::vector<double> g{3.0, -0.5};
  adam.step(x, g);
  // Bias-corrected first step is lr * sign(g).
  EXPECT_NEAR(x[0], 0.9, 1e-6);
  EXPECT_NEAR(x[1], -0.9, 1e-6);
  EXPECT_EQ(adam.steps(), 1u);
  std::vector<double> wrong(3);
  EXPECT_THROW(adam.step(wrong, g), Error);
}

TEST(Adam, MinimizesQuadratic) {
  Adam adam(3, AdamConfig{0.05});
  std::vector<double> x{3.0, -2.0, 0.5};
  for (int k = 0; k < 2000; ++k) {
    std::vector<double> g(3);
    for (int i = 0; i < 3; ++i) g[i] = 2.0 * (x[i] - i);
    adam.step(x, g);
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(x[i], i, 1e-2);
}

TEST(Direct, TriangleConverges) {
  const Graph k3 = complete_graph(3);
  const DirectResult r = optimize_direct(k3, CliqueLossSpec{}, 500, AdamConfig{0.1});
  EXPECT_LE(r.final_loss, 0.05);
  EXPECT_LT(r.final_loss, r.initial_loss);
  EXPECT_EQ(r.loss_history.size(), 501u);
  EXPECT_DOUBLE_EQ(r.loss_history.front(), r.initial_loss);
  EXPECT_DOUBLE_EQ(r.loss_history.back(), r.final_loss);
}

// The default lr 0.01 stalls above 1e-2 at 2000 steps once p saturates; 0.1 does not.
TEST(Direct, CompleteGraphsConverge) {
  for (std::size_t n = 2; n <= 10; ++n) {
    const Graph g = complete_graph(n);
    const DirectResult r = optimize_direct(g, CliqueLossSpec{}, 2000, AdamConfig{0.1});
    EXPECT_LT(r.final_loss, 1e-2) << "n = " << n;
  }
}

TEST(Direct, CompleteGraphLossKeepsFallingAtDefaultRate) {
  const Graph g = complete_graph(10);
  double previous = optimize_direct(g, CliqueLossSpec{}, 0, AdamConfig{}).final_loss;
  for (std::size_t steps : {250u, 1000u, 4000u, 16000u}) {
    const double loss = optimize_direct(g, CliqueLossSpec{}, steps, AdamConfig{}).final_loss;
    EXPECT_LT(loss, previous) << steps << " steps";
    previous = loss;
  }
  EXPECT_LT(previous, 0.05);
}

TEST(Direct, TwoTrianglesDecodeToTriangle) {
  const Graph g = make_graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const DirectResult r = optimize_direct(g, CliqueLossSpec{}, 300, AdamConfig{});
  const CliquePenaltyObjective obj{CliqueLossSpec{}.resolve(g)};
  const NodeSet s = decode_conditional(g, r.produced, obj).set;
  EXPECT_TRUE(is_clique(g, s));
  EXPECT_EQ(s.size(), 3u);
}

TEST(Direct, ZeroStepsLeavesInitialization) {
  const Graph g = two_triangles();
  const DirectResult r = optimize_direct(g, CliqueLossSpec{}, 0, AdamConfig{});
  for (double x : r.produced.probs()) EXPECT_DOUBLE_EQ(x, 0.5);
  EXPECT_EQ(r.loss_history.size(), 1u);
  EXPECT_DOUBLE_EQ(r.initial_loss, r.final_loss);
}

TEST(Direct, MaskedNodesStayAtZero) {
  const Graph g = two_triangles();
  DirectInit init;
  init.active = {1, 1, 1, 0, 0, 0};
  const DirectResult r = optimize_direct(g, CliqueLossSpec{}, 100, AdamConfig{}, init);
  for (NodeId v = 3; v < 6; ++v) EXPECT_DOUBLE_EQ(r.produced[v], 0.0);
  init.active = {1, 1};
  EXPECT_THROW(optimize_direct(g, CliqueLossSpec{}, 1, AdamConfig{}, init), Error);
}

TEST(Direct, CutLossEvaluatesRescaled) {
  const Graph g = two_triangles();
  const VolumeConstraint box{5.0, 9.0};
  const LossEvaluation e = evaluate_loss(g, CutLossSpec{box}, NodeDistribution::constant(6, 0.5));
  EXPECT_NEAR(expected_volume(g, e.evaluated), box.target(), 1e-9);
  EXPECT_TRUE(e.reached_target);
  // From p = ½ every coordinate moves alike and the rescaled p never changes.
  Rng rng = make_rng(50);
  DirectInit init;
  for (int i = 0; i < 6; ++i) init.logits.push_back(uniform_real(rng, -1.0, 1.0));
  const DirectResult r = optimize_direct(g, CutLossSpec{box}, 300, AdamConfig{}, init);
  EXPECT_LT(r.final_loss, r.initial_loss);
  EXPECT_NEAR(expected_volume(g, r.evaluated), box.target(), 1e-6);
}

// MPNN ----------------------------------------------------------------------

namespace {
double linear_loss(std::span<const double> c, const NodeDistribution& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * p[i];
  return s;
}
}  // namespace

TEST(Mpnn, ZeroWeightsGiveHalf) {
  const Graph g = petersen();
  const NodeDistribution p = mpnn_forward(g, MpnnParams(MpnnShape{3, 8}), 0);
  for (double x : p.probs()) EXPECT_DOUBLE_EQ(x, 0.5);
}

TEST(Mpnn, OutputInUnitIntervalWithExtremes) {
  Rng rng = make_rng(51);
  const Graph g = random_graph(25, 0.2, rng);
  const NodeDistribution p = mpnn_forward(g, MpnnParams::random(MpnnShape{3, 16}, rng), 4);
  EXPECT_DOUBLE_EQ(*std::min_element(p.probs().begin(), p.probs().end()), 0.0);
  EXPECT_DOUBLE_EQ(*std::max_element(p.probs().begin(), p.probs().end()), 1.0);
}

TEST(Mpnn, NoRoundsTreatsNonSeedNodesAlike) {
  Rng rng = make_rng(52);
  const Graph g = petersen();
  const NodeDistribution p = mpnn_forward(g, MpnnParams::random(MpnnShape{0, 8}, rng), 3);
  for (NodeId v = 1; v < 10; ++v) {
    if (v != 3) {
      EXPECT_DOUBLE_EQ(p[v], p[0]);
    }
  }
}

TEST(Mpnn, PermutationEquivariant) {
  Rng rng = make_rng(53);
  const std::size_t n = 15;
  const Graph g = random_graph(n, 0.3, rng, true);
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    const auto row = g.neighbors(i);
    const auto ws = g.neighbor_weights(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] > i) edges.push_back({perm[i], perm[row[k]], ws[k]});
    }
  }
  const Graph h = Graph::from_edges(n, edges);
  const MpnnParams params = MpnnParams::random(MpnnShape{3, 8}, rng);
  const NodeDistribution p = mpnn_forward(g, params, 2);
  const NodeDistribution q = mpnn_forward(h, params, perm[2]);
  for (NodeId i = 0; i < n; ++i) EXPECT_NEAR(p[i], q[perm[i]], 1e-12);
}

TEST(Mpnn, ReceptiveFieldMasking) {
  Rng rng = make_rng(54);
  const Graph path = path_graph(10);
  const NodeDistribution p = mpnn_forward(path, MpnnParams::random(MpnnShape{2, 8}, rng), 0);
  // Nodes more than two hops away are zeroed and all share one score.
  for (NodeId v = 4; v < 10; ++v) EXPECT_DOUBLE_EQ(p[v], p[3]);
}

TEST(Mpnn, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(55);
  for (int rep = 0; rep < 3; ++rep) {
    const Graph g = random_graph(12, 0.3, rng, true);
    const MpnnParams params = MpnnParams::random(MpnnShape{2, 6}, rng);
    std::vector<double> c(12);
    for (double& x : c) x = uniform_real(rng, -1.0, 1.0);
    MpnnCache cache;
    const NodeDistribution p = mpnn_forward(g, params, 1, &cache);
    const MpnnParams grad = mpnn_backward(g, params, cache, c);
    const double h = 1e-6;
    std::size_t checked = 0;
    for (std::size_t k = 0; k < params.values().size(); ++k) {
      MpnnParams up = params, down = params;
      up.values()[k] += h;
      down.values()[k] -= h;
      const double fd = (linear_loss(c, mpnn_forward(g, up, 1)) - linear_loss(c, mpnn_forward(g, down, 1))) / (2 * h);
      EXPECT_LE(rel_err(grad.values()[k], fd), 1e-4) << "parameter " << k;
      ++checked;
    }
    EXPECT_EQ(checked, MpnnParams::total_size(MpnnShape{2, 6}));
  }
}

TEST(Mpnn, ZeroUpstreamGradient) {
  Rng rng = make_rng(56);
  const Graph g = petersen();
  const MpnnParams params = MpnnParams::random(MpnnShape{3, 8}, rng);
  MpnnCache cache;
  mpnn_forward(g, params, 0, &cache);
  const MpnnParams grad = mpnn_backward(g, params, cache, std::vector<double>(10, 0.0));
  for (double x : grad.values()) EXPECT_EQ(x, 0.0);
}

TEST(Mpnn, StaleCacheRejected) {
  Rng rng = make_rng(57);
  const Graph g = petersen();
  MpnnParams params = MpnnParams::random(MpnnShape{2, 4}, rng);
  MpnnCache cache;
  mpnn_forward(g, params, 0, &cache);
  const std::vector<double> up(10, 1.0);
  EXPECT_NO_THROW(mpnn_backward(g, params, cache, up));
  const Graph other = petersen();
  EXPECT_THROW(mpnn_backward(other, params, cache, up), Error);
  params.values()[0] += 0.1;
  EXPECT_THROW(mpnn_backward(g, params, cache, up), Error);
}

TEST(Mpnn, ShapeChecks) {
  EXPECT_THROW(MpnnParams::from_values(MpnnShape{1, 2}, std::vector<double>(3)), Error);
  EXPECT_THROW(mpnn_forward(petersen(), MpnnParams(MpnnShape{1, 2}), 10), Error);
}

// Training -------------------------------------------------------------------

namespace {
std::vector<Graph> planted_corpus(std::size_t count, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<Graph> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(gen_planted_clique(20, 6, 0.2, rng).graph);
  return out;
}
}  // namespace

TEST(Training, ZeroEpochsKeepsInitialParameters) {
  const auto corpus = planted_corpus(4, 61);
  TrainConfig cfg;
  cfg.shape = {2, 8};
  cfg.epochs = 0;
  Rng a = make_rng(1), b = make_rng(1);
  const TrainResult r = train_mpnn(corpus, corpus, cfg, a);
  EXPECT_TRUE(r.train_loss.empty());
  EXPECT_EQ(r.best, MpnnParams::random(cfg.shape, b));
  EXPECT_EQ(r.best_epoch, 0u);
  EXPECT_TRUE(std::isfinite(r.best_validation_loss));
  EXPECT_THROW(train_mpnn(std::span<const Graph>{}, corpus, cfg, a), Error);
}

TEST(Training, SingleGraphApproachesDirectOptimum) {
  const auto corpus = planted_corpus(1, 62);
  TrainConfig cfg;
  cfg.shape = {3, 16};
  cfg.epochs = 2000;
  cfg.batch_size = 1;
  Rng rng = make_rng(3);
  const TrainResult r = train_mpnn(corpus, corpus, cfg, rng);
  const double direct = optimize_direct(corpus[0], CliqueLossSpec{}, 2000, AdamConfig{}).final_loss;
  EXPECT_LE(r.best_validation_loss, direct + 0.1 * std::abs(direct));
}

TEST(Training, LossDecreases) {
  const auto corpus = planted_corpus(16, 63);
  std::vector<double> drops;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg;
    cfg.shape = {2, 8};
    cfg.epochs = 10;
    cfg.batch_size = 4;
    Rng rng = make_rng(seed);
    const TrainResult r = train_mpnn(corpus, corpus, cfg, rng);
    ASSERT_EQ(r.validation_loss.size(), 10u);
    drops.push_back(r.validation_loss.front() - r.validation_loss.back());
  }
  std::sort(drops.begin(), drops.end());
  EXPECT_GT(drops[2], 0.0);
}

TEST(Training, CutLossTrains) {
  const auto corpus = planted_corpus(6, 64);
  TrainConfig cfg;
  cfg.shape = {2, 8};
  cfg.loss = TrainLossKind::cut;
  cfg.epochs = 3;
  Rng rng = make_rng(4);
  const TrainResult r = train_mpnn(corpus, {}, cfg, rng);
  EXPECT_EQ(r.train_loss.size(), 3u);
  for (double x : r.train_loss) EXPECT_TRUE(std::isfinite(x));
}

TEST(Training, ResumeMatchesUninterrupted) {
  const auto corpus = planted_corpus(6, 65);
  TrainConfig cfg;
  cfg.shape = {2, 8};
  cfg.epochs = 4;
  cfg.batch_size = 3;
  Rng full_rng = make_rng(9);
  const TrainResult full = train_mpnn(corpus, corpus, cfg, full_rng);

  cfg.epochs = 2;
  Rng part_rng = make_rng(9);
  const TrainResult first = train_mpnn(corpus, corpus, cfg, part_rng);
  const TrainResult second = train_mpnn(corpus, corpus, cfg, part_rng, first.last);
  EXPECT_EQ(second.last.epochs_completed, 4u);
  EXPECT_EQ(second.last.optimizer.steps(), full.last.optimizer.steps());
  EXPECT_EQ(second.last.params, full.last.params);
}

TEST(Checkpoint, RoundTrip) {
  const auto corpus = planted_corpus(3, 66);
  TrainConfig cfg;
  cfg.shape = {2, 5};
  cfg.epochs = 2;
  Rng rng = make_rng(7);
  const TrainResult r = train_mpnn(corpus, corpus, cfg, rng);
  Checkpoint c{r.best, r.last, Json{{"note", "x"}}};
  for (const std::string& data : {checkpoint_to_json(c), checkpoint_to_binary(c)}) {
    const Checkpoint back = data.compare(0, 4, "POCK") == 0 ? checkpoint_from_binary(data) : checkpoint_from_json(data);
    EXPECT_EQ(back.best, c.best);
    EXPECT_EQ(back.state.params, c.state.params);
    EXPECT_EQ(back.state.epochs_completed, 2u);
    EXPECT_EQ(back.state.optimizer.steps(), c.state.optimizer.steps());
    EXPECT_EQ(back.state.optimizer.first_moment(), c.state.optimizer.first_moment());
    EXPECT_EQ(back.state.optimizer.second_moment(), c.state.optimizer.second_moment());
    EXPECT_EQ(back.metadata["note"], "x");
  }
  std::string truncated = checkpoint_to_binary(c);
  truncated.pop_back();
  EXPECT_THROW(checkpoint_from_binary(truncated), Error);
}
