#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "inf2vec/model.hpp"
#include "inf2vec/optim.hpp"
#include "oracles.hpp"

using namespace inf2vec;
using T = Tensor<Real>;
using G = Graph<Real>;

namespace {

ModelConfig tiny_config(Mode mode, DecoderKind decoder) {
  ModelConfig cfg;
  cfg.K = 3;
  cfg.d_type = 3;
  cfg.d_time = 2;
  cfg.d_hidden = 4;
  cfg.M = 2;
  cfg.mode = mode;
  cfg.decoder = decoder;
  cfg.quad_points = 4;
  return cfg;
}

double softplus_inverse(double y) { return std::log(std::expm1(y)); }

}  // namespace

TEST_CASE("event embedding concatenates type and time parts") {
  ModelConfig cfg;
  cfg.K = 2;
  cfg.d_type = 2;
  cfg.d_time = 1;
  cfg.d_hidden = 3;
  cfg.M = 1;
  Inf2vecModel model(cfg, 1);
  T e = model.embed_event(0, 1, 0.5);
  REQUIRE(e.numel() == 3);
}

TEST_CASE("zero temporal affine embeds dt=0 to the zero vector") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 2);
  model.param("time_w").value = T({cfg.K, cfg.d_time});
  model.param("time_b").value = T({cfg.K, cfg.d_time});
  T e = model.embed_event(1, 0, 0.0);
  for (int j = cfg.d_type; j < cfg.embed_dim(); ++j) REQUIRE(e[j] == Real(0));
}

TEST_CASE("the same event embeds differently in different contexts") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 3);
  T e0 = model.embed_event(0, 2, 1.0);
  T e1 = model.embed_event(1, 2, 1.0);
  bool differs = false;
  for (int j = 0; j < cfg.d_type; ++j) differs = differs || e0[j] != e1[j];
  REQUIRE(differs);
}

TEST_CASE("empty history encodes to the zero initial state") {
  for (Mode mode : {Mode::local, Mode::global}) {
    ModelConfig cfg = tiny_config(mode, DecoderKind::density);
    Inf2vecModel model(cfg, 4);
    HistoryEncodings h = model.encode_history({});
    REQUIRE(h.rows() == cfg.context_count());
    REQUIRE(h.cols() == cfg.d_hidden);
    for (int64_t i = 0; i < h.numel(); ++i) REQUIRE(h[i] == Real(0));
  }
}

TEST_CASE("an all-zero recurrent cell keeps the zero state") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 5);
  model.zero_all_params();
  HistoryEncodings h =
      model.encode_history({Event{0, 0.5}, Event{1, 1.0}, Event{2, 4.0}});
  for (int64_t i = 0; i < h.numel(); ++i) REQUIRE(h[i] == Real(0));
}

TEST_CASE("local encoding matches a hand-unrolled two-step recurrence") {
  ModelConfig cfg;
  cfg.K = 3;
  cfg.d_type = 2;
  cfg.d_time = 1;
  cfg.d_hidden = 2;
  cfg.M = 1;
  Inf2vecModel model(cfg, 6);

  std::vector<Event> events{Event{0, 0.7}, Event{1, 1.2}};
  HistoryEncodings h = model.encode_history(events);
  REQUIRE(h.rows() == 3);

  // mirror the shared weights into the plain-double oracle
  oracles::TinyGru gru;
  auto matrix_of = [&](const char* name, int rows, int cols) {
    const T& t = model.param(name).value;
    std::vector<std::vector<double>> m(static_cast<size_t>(rows),
                                       std::vector<double>(static_cast<size_t>(cols)));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        m[static_cast<size_t>(i)][static_cast<size_t>(j)] = t.at(i, j);
    return m;
  };
  int in = cfg.embed_dim(), dh = cfg.d_hidden;
  gru.wz = matrix_of("gru_wz", in, dh);
  gru.wr = matrix_of("gru_wr", in, dh);
  gru.wh = matrix_of("gru_wh", in, dh);
  gru.uz = matrix_of("gru_uz", dh, dh);
  gru.ur = matrix_of("gru_ur", dh, dh);
  gru.uh = matrix_of("gru_uh", dh, dh);
  gru.bz.assign(static_cast<size_t>(dh), 0.0);
  gru.br.assign(static_cast<size_t>(dh), 0.0);
  gru.bh.assign(static_cast<size_t>(dh), 0.0);

  for (int k = 0; k < cfg.K; ++k) {
    std::vector<double> state(static_cast<size_t>(dh), 0.0);
    double prev = 0.0;
    for (const Event& ev : events) {
      T e = model.embed_event(k, ev.type_id, ev.time - prev);
      std::vector<double> x(e.data(), e.data() + e.numel());
      state = gru.step(x, state);
      prev = ev.time;
    }
    for (int j = 0; j < dh; ++j)
      REQUIRE_THAT(h.at(k, j), Catch::Matchers::WithinAbs(state[static_cast<size_t>(j)], 1e-12));
  }
}

TEST_CASE("zero encodings and zero readout give uniform type probabilities") {
  for (Mode mode : {Mode::local, Mode::global}) {
    ModelConfig cfg = tiny_config(mode, DecoderKind::density);
    Inf2vecModel model(cfg, 7);
    model.zero_all_params();
    NextEventDistribution d = model.next_distribution({});
    for (int k = 0; k < cfg.K; ++k)
      REQUIRE_THAT(d.type_probs[static_cast<size_t>(k)],
                   Catch::Matchers::WithinAbs(1.0 / cfg.K, 1e-15));
  }
}

TEST_CASE("standard log-normal density at tau=1 is 1/sqrt(2 pi)") {
  NextEventDistribution d;
  d.type_probs = {1.0};
  d.pi = {{1.0}};
  d.mu = {{0.0}};
  d.sigma = {{1.0}};
  REQUIRE_THAT(d.density(1.0, 0),
               Catch::Matchers::WithinAbs(1.0 / std::sqrt(2.0 * kPi), 1e-9));
  REQUIRE_THAT(d.density(1.0, 0), Catch::Matchers::WithinAbs(0.39894, 1e-5));
}

TEST_CASE("joint density integrates to one") {
  for (uint64_t seed : {10ULL, 11ULL, 12ULL}) {
    ModelConfig cfg = tiny_config(seed % 2 ? Mode::local : Mode::global,
                                  DecoderKind::density);
    Inf2vecModel model(cfg, seed);
    NextEventDistribution d =
        model.next_distribution({Event{0, 0.4}, Event{2, 1.9}});
    double mass = 0.0;
    for (int k = 0; k < cfg.K; ++k)
      mass += d.type_probs[static_cast<size_t>(k)] *
              oracles::mixture_mass_quadrature(d.pi[static_cast<size_t>(k)],
                                               d.mu[static_cast<size_t>(k)],
                                               d.sigma[static_cast<size_t>(k)]);
    REQUIRE(mass > 0.999);
    REQUIRE(mass < 1.001);
  }
}

TEST_CASE("zero-weight intensity decoder emits softplus(0) = ln 2") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::intensity);
  Inf2vecModel model(cfg, 8);
  model.zero_all_params();
  NextEventDistribution d = model.next_distribution({Event{1, 0.3}});
  std::vector<double> lam = d.intensity(0.7);
  REQUIRE(lam.size() == 3);
  for (double v : lam) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
}

TEST_CASE("intensities are positive for random inputs") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::intensity);
  Inf2vecModel model(cfg, 9);
  Rng rng(55);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Event> prefix;
    double t = 0.0;
    int n = static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) {
      t += rng.exponential(1.0);
      prefix.push_back(Event{static_cast<int>(rng.below(3)), t});
    }
    NextEventDistribution d = model.next_distribution(prefix);
    for (double v : d.intensity(rng.uniform(0.0, 5.0))) REQUIRE(v > 0.0);
  }
}

TEST_CASE("local and global modes decode differently on shared history") {
  ModelConfig local_cfg = tiny_config(Mode::local, DecoderKind::intensity);
  ModelConfig global_cfg = tiny_config(Mode::global, DecoderKind::intensity);
  Inf2vecModel local_model(local_cfg, 10);
  Inf2vecModel global_model(global_cfg, 10);
  std::vector<Event> prefix{Event{0, 0.5}, Event{2, 1.0}};
  auto lam_local = local_model.next_distribution(prefix).intensity(0.5);
  auto lam_global = global_model.next_distribution(prefix).intensity(0.5);
  bool differs = false;
  for (size_t k = 0; k < lam_local.size(); ++k)
    differs = differs || std::fabs(lam_local[k] - lam_global[k]) > 1e-12;
  REQUIRE(differs);
}

TEST_CASE("density NLL matches the hand computation on one event") {
  ModelConfig cfg;
  cfg.K = 2;
  cfg.d_type = 2;
  cfg.d_time = 1;
  cfg.d_hidden = 2;
  cfg.M = 1;
  cfg.mode = Mode::local;
  cfg.decoder = DecoderKind::density;
  Inf2vecModel model(cfg, 11);
  model.zero_all_params();
  // sigma = softplus(b) + 1e-3 = 1, mu = 0, pi = 1, uniform types
  Real b = static_cast<Real>(softplus_inverse(1.0 - Inf2vecModel::kSigmaFloor));
  T& sg = model.param("sigma_b").value;
  for (int64_t i = 0; i < sg.numel(); ++i) sg[i] = b;
  EventSequence seq{"s", {Event{0, 1.0}}, 2.0};
  double nll = model.sequence_nll(seq);
  double expected = -std::log(0.5) - std::log(1.0 / std::sqrt(2.0 * kPi));
  REQUIRE_THAT(nll, Catch::Matchers::WithinAbs(expected, 1e-9));
  REQUIRE_THAT(nll, Catch::Matchers::WithinAbs(1.6121, 2e-4));
}

TEST_CASE("intensity NLL reduces to the Poisson closed form at lambda=1") {
  ModelConfig cfg;
  cfg.K = 1;
  cfg.d_type = 2;
  cfg.d_time = 1;
  cfg.d_hidden = 2;
  cfg.M = 1;
  cfg.mode = Mode::local;
  cfg.decoder = DecoderKind::intensity;
  cfg.quad_points = 32;
  Inf2vecModel model(cfg, 12);
  model.zero_all_params();
  model.param("mlp2_b").value[0] = static_cast<Real>(softplus_inverse(1.0));
  EventSequence seq{"s", {Event{0, 0.8}}, 2.0};
  REQUIRE_THAT(model.sequence_nll(seq), Catch::Matchers::WithinAbs(2.0, 1e-9));
}

TEST_CASE("sequence NLL gradients pass finite differences in all four variants") {
  EventSequence seq{"s", {Event{0, 0.4}, Event{2, 1.1}, Event{1, 2.0}}, 2.5};
  for (Mode mode : {Mode::local, Mode::global})
    for (DecoderKind dec : {DecoderKind::density, DecoderKind::intensity}) {
      ModelConfig cfg = tiny_config(mode, dec);
      Inf2vecModel model(cfg, 13);
      auto loss = [&](G& g) { return model.sequence_nll_graph(g, seq); };
      auto rep = finite_diff_check(model.params(), loss, 1e-5);
      INFO("mode " << to_string(mode) << ", decoder " << to_string(dec) << ": "
                   << rep.worst);
      REQUIRE(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("empty sequences contribute zero density NLL") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 14);
  EventSequence seq{"s", {}, 3.0};
  REQUIRE(model.sequence_nll(seq) == 0.0);
}

TEST_CASE("empty sequences contribute only the compensator under intensity") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::intensity);
  cfg.K = 1;
  Inf2vecModel model(cfg, 15);
  model.zero_all_params();
  model.param("mlp2_b").value[0] = static_cast<Real>(softplus_inverse(0.5));
  EventSequence seq{"s", {}, 4.0};
  REQUIRE_THAT(model.sequence_nll(seq), Catch::Matchers::WithinAbs(0.5 * 4.0, 1e-9));
}

TEST_CASE("altering an event's type moves every local embedding and encoding") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 16);
  for (int k = 0; k < cfg.K; ++k) {
    T before = model.embed_event(k, 0, 0.5);
    T after = model.embed_event(k, 1, 0.5);
    bool moved = false;
    for (int j = 0; j < cfg.d_type; ++j) moved = moved || before[j] != after[j];
    REQUIRE(moved);
  }
  HistoryEncodings h1 = model.encode_history({Event{0, 0.5}, Event{2, 1.5}});
  HistoryEncodings h2 = model.encode_history({Event{1, 0.5}, Event{2, 1.5}});
  for (int k = 0; k < cfg.K; ++k) {
    bool moved = false;
    for (int j = 0; j < cfg.d_hidden; ++j) moved = moved || h1.at(k, j) != h2.at(k, j);
    REQUIRE(moved);
  }
}

TEST_CASE("type probabilities and mixture weights normalize on random states") {
  Rng rng(77);
  for (uint64_t seed = 0; seed < 25; ++seed) {
    ModelConfig cfg = tiny_config(seed % 2 ? Mode::local : Mode::global,
                                  DecoderKind::density);
    Inf2vecModel model(cfg, 1000 + seed);
    std::vector<Event> prefix;
    double t = 0.0;
    int n = static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) {
      t += rng.exponential(0.7);
      prefix.push_back(Event{static_cast<int>(rng.below(3)), t});
    }
    NextEventDistribution d = model.next_distribution(prefix);
    double ts = 0.0;
    for (double p : d.type_probs) {
      REQUIRE(p > 0.0);
      REQUIRE(p < 1.0);
      ts += p;
    }
    REQUIRE_THAT(ts, Catch::Matchers::WithinAbs(1.0, 1e-6));
    for (int k = 0; k < cfg.K; ++k) {
      double ps = 0.0;
      for (int m = 0; m < cfg.M; ++m) {
        REQUIRE(d.sigma[static_cast<size_t>(k)][static_cast<size_t>(m)] >=
                Inf2vecModel::kSigmaFloor);
        ps += d.pi[static_cast<size_t>(k)][static_cast<size_t>(m)];
      }
      REQUIRE_THAT(ps, Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
  }
}

TEST_CASE("per-event distributions match prefix-by-prefix decoding") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 20);
  EventSequence seq{"s", {Event{0, 0.5}, Event{2, 1.4}, Event{1, 2.2}}, 3.0};
  auto dists = model.per_event_distributions(seq);
  REQUIRE(dists.size() == 3);
  for (size_t i = 0; i < seq.events.size(); ++i) {
    std::vector<Event> prefix(seq.events.begin(),
                              seq.events.begin() + static_cast<long>(i));
    NextEventDistribution direct = model.next_distribution(prefix);
    for (int k = 0; k < cfg.K; ++k) {
      REQUIRE_THAT(dists[i].type_probs[static_cast<size_t>(k)],
                   Catch::Matchers::WithinAbs(direct.type_probs[static_cast<size_t>(k)],
                                              1e-12));
      for (int m = 0; m < cfg.M; ++m)
        REQUIRE_THAT(dists[i].mu[static_cast<size_t>(k)][static_cast<size_t>(m)],
                     Catch::Matchers::WithinAbs(
                         direct.mu[static_cast<size_t>(k)][static_cast<size_t>(m)],
                         1e-12));
    }
  }
}

TEST_CASE("predict_next takes the argmax type") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 17);
  model.zero_all_params();
  T& tb = model.param("type_b").value;
  tb[0] = static_cast<Real>(std::log(0.1));
  tb[1] = static_cast<Real>(std::log(0.7));
  tb[2] = static_cast<Real>(std::log(0.2));
  auto [type, time] = model.predict_next({});
  REQUIRE(type == 1);
}

TEST_CASE("predicted time offset is 1 when every component median is 1") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::density);
  Inf2vecModel model(cfg, 18);
  model.zero_all_params();  // mu = 0 for every component, so exp(mu) = 1
  T& tb = model.param("type_b").value;
  tb[0] = Real(2.0);  // arbitrary skew; the median mix is still 1
  auto [type, time] = model.predict_next({Event{0, 3.0}});
  REQUIRE_THAT(time, Catch::Matchers::WithinAbs(3.0 + 1.0, 1e-12));
}

TEST_CASE("mixture-of-medians readout on a hand-built distribution") {
  NextEventDistribution d;
  d.type_probs = {0.0, 1.0};
  d.pi = {{1.0}, {0.5, 0.5}};
  d.mu = {{0.0}, {0.0, std::log(4.0)}};
  d.sigma = {{1.0}, {1.0, 1.0}};
  // one-hot on type 1: 0.5 * 1 + 0.5 * 4 = 2.5
  REQUIRE_THAT(predicted_tau(d), Catch::Matchers::WithinAbs(2.5, 1e-12));
}

TEST_CASE("predict_next rejects the intensity decoder") {
  ModelConfig cfg = tiny_config(Mode::local, DecoderKind::intensity);
  Inf2vecModel model(cfg, 19);
  REQUIRE_THROWS_WITH(model.predict_next({}),
                      Catch::Matchers::ContainsSubstring("unsupported"));
}

TEST_CASE("the argmax type is invariant to monotone score transforms") {
  Rng rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    T scores = T::uniform({5}, -2, 2, rng);
    auto argmax_softmax = [](const T& s) {
      G g;
      Var<Real> y = softmax(g.constant(s));
      int best = 0;
      for (int i = 1; i < 5; ++i)
        if (g.value(y)[i] > g.value(y)[best]) best = i;
      return best;
    };
    int base = argmax_softmax(scores);
    T affine({5}), cubic({5}), expo({5});
    for (int i = 0; i < 5; ++i) {
      double s = scores[i];
      affine[i] = static_cast<Real>(2.0 * s + 1.0);
      cubic[i] = static_cast<Real>(s * s * s);
      expo[i] = static_cast<Real>(std::exp(s));
    }
    REQUIRE(argmax_softmax(affine) == base);
    REQUIRE(argmax_softmax(cubic) == base);
    REQUIRE(argmax_softmax(expo) == base);
  }
}
