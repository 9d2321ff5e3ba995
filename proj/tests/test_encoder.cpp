#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "mnemoseq/encoder.hpp"
#include "mnemoseq/kernels.hpp"
#include "support/testutil.hpp"

using namespace mnemoseq;
using Catch::Matchers::WithinAbs;

namespace {

struct NamedMat {
  const char* name;
  Mat<double>* value;
};

std::vector<NamedMat> encoder_entries(EncoderParams<double>& p) {
  return {
      {"char_embed", &p.char_embed},
      {"fwd.w_reset", &p.fwd.w_reset},   {"fwd.u_reset", &p.fwd.u_reset},
      {"fwd.w_update", &p.fwd.w_update}, {"fwd.u_update", &p.fwd.u_update},
      {"fwd.w_cand", &p.fwd.w_cand},     {"fwd.u_cand", &p.fwd.u_cand},
      {"bwd.w_reset", &p.bwd.w_reset},   {"bwd.u_reset", &p.bwd.u_reset},
      {"bwd.w_update", &p.bwd.w_update}, {"bwd.u_update", &p.bwd.u_update},
      {"bwd.w_cand", &p.bwd.w_cand},     {"bwd.u_cand", &p.bwd.u_cand},
  };
}

}  // namespace

TEST_CASE("gru step with zero weights halves the previous state") {
  EncoderParams<double> p = EncoderParams<double>::zeros(3, 4, 5);
  Rng rng(1);
  Vec<double> h_prev = testutil::random_vec<double>(rng, 4, -1.0, 1.0);
  Vec<double> h = gru_step(p, Direction::kForward, 2, h_prev);
  // r = z = sigmoid(0) = 0.5 and the candidate is tanh(0) = 0
  CHECK((h - 0.5 * h_prev).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gru step at the origin stays at the origin") {
  EncoderParams<double> p = EncoderParams<double>::zeros(3, 4, 5);
  Vec<double> h_prev = Vec<double>::Zero(4);
  Vec<double> h = gru_step(p, Direction::kBackward, 0, h_prev);
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gru step scalar case matches hand evaluation") {
  EncoderParams<double> p = EncoderParams<double>::zeros(1, 1, 1);
  p.char_embed.setConstant(1.0);
  testutil::set_all(p.fwd, 1.0);
  Vec<double> h_prev(1);
  h_prev[0] = 1.0;
  GruStepCache<double> cache;
  Vec<double> h = gru_step(p, Direction::kForward, 0, h_prev, &cache);
  CHECK_THAT(cache.reset[0], WithinAbs(0.8808, 1e-4));
  CHECK_THAT(cache.update[0], WithinAbs(0.8808, 1e-4));
  CHECK_THAT(cache.cand[0], WithinAbs(0.9546, 1e-4));
  CHECK_THAT(h[0], WithinAbs(0.9600, 1e-4));
}

TEST_CASE("gru step rejects out-of-vocabulary characters") {
  EncoderParams<double> p = EncoderParams<double>::zeros(3, 4, 5);
  Vec<double> h_prev = Vec<double>::Zero(4);
  CHECK_THROWS_AS(gru_step(p, Direction::kForward, 5, h_prev), std::out_of_range);
  CHECK_THROWS_AS(gru_step(p, Direction::kForward, -1, h_prev), std::out_of_range);
}

TEST_CASE("encode rejects an empty password") {
  EncoderParams<double> p = EncoderParams<double>::zeros(3, 4, 5);
  CHECK_THROWS_AS(encode<double>({}, p), std::invalid_argument);
}

TEST_CASE("length-1 encoding is direction-symmetric under shared weights") {
  EncoderParams<double> p = EncoderParams<double>::zeros(3, 4, 5);
  Rng rng(2);
  testutil::fill(p, rng, -0.8, 0.8);
  p.bwd = p.fwd;
  Mat<double> states = encode<double>({3}, p);
  REQUIRE(states.rows() == 1);
  CHECK(states.row(0).head(4) == states.row(0).tail(4));
}

TEST_CASE("palindrome encoding mirrors between directions") {
  EncoderParams<double> p = EncoderParams<double>::zeros(3, 4, 5);
  Rng rng(3);
  testutil::fill(p, rng, -0.8, 0.8);
  p.bwd = p.fwd;
  std::vector<int> chars = {0, 2, 0};
  Mat<double> states = encode(chars, p);
  const Eigen::Index T = states.rows();
  for (Eigen::Index t = 0; t < T; ++t)
    CHECK(states.row(t).head(4) == states.row(T - 1 - t).tail(4));
}

TEST_CASE("zero parameters encode to the zero matrix") {
  EncoderParams<double> p = EncoderParams<double>::zeros(3, 4, 5);
  Mat<double> states = encode<double>({0, 1, 2, 3}, p);
  CHECK(states.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hidden states stay strictly inside the unit box") {
  EncoderParams<double> p = EncoderParams<double>::zeros(6, 5, 7);
  Rng rng(4);
  testutil::fill(p, rng, -2.0, 2.0);  // well beyond the usual init range
  std::vector<int> chars = {0, 6, 3, 2, 5, 1, 4, 0, 3, 3, 6, 2, 1, 5, 0, 4};
  Mat<double> states = encode(chars, p);
  CHECK(states.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("encoding is deterministic") {
  EncoderParams<float> p = EncoderParams<float>::zeros(4, 6, 8);
  Rng rng(5);
  testutil::fill(p, rng, -0.08, 0.08);
  std::vector<int> chars = {1, 7, 2, 2, 0, 5};
  Mat<float> a = encode(chars, p);
  Mat<float> b = encode(chars, p);
  CHECK(a == b);
}

TEST_CASE("encoder gradients match central differences") {
  const int m = 3, n = 3, vc = 4;
  EncoderParams<double> p = EncoderParams<double>::zeros(m, n, vc);
  Rng rng(6);
  testutil::fill(p, rng, -0.5, 0.5);
  std::vector<int> chars = {2, 0, 3, 1};  // T = 4

  // scalar objective: weighted sum of all encoder states
  Mat<double> weights(4, 2 * n);
  rng.fill_uniform(weights, -1.0, 1.0);

  EncodeCache<double> cache;
  encode(chars, p, &cache);
  EncoderParams<double> grads = EncoderParams<double>::zeros(m, n, vc);
  encode_backward(chars, p, cache, weights, grads);

  auto entries = encoder_entries(p);
  auto grad_entries = encoder_entries(grads);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    EncoderParams<double> probe = p;
    Mat<double>* slot = encoder_entries(probe)[k].value;
    auto f = [&](const Mat<double>& candidate) {
      *slot = candidate;
      return (encode(chars, probe).cwiseProduct(weights)).sum();
    };
    Mat<double> numeric = numeric_gradient(f, *entries[k].value, 1e-5);
    INFO(entries[k].name);
    CHECK(max_rel_error(*grad_entries[k].value, numeric) <= 1e-4);
  }
}

TEST_CASE("repeated characters accumulate embedding gradient") {
  // both occurrences of char 1 must contribute to its embedding column
  const int m = 2, n = 2, vc = 3;
  EncoderParams<double> p = EncoderParams<double>::zeros(m, n, vc);
  Rng rng(7);
  testutil::fill(p, rng, -0.5, 0.5);
  std::vector<int> chars = {1, 1};

  EncodeCache<double> cache;
  encode(chars, p, &cache);
  Mat<double> d_states = Mat<double>::Ones(2, 2 * n);
  EncoderParams<double> grads = EncoderParams<double>::zeros(m, n, vc);
  encode_backward(chars, p, cache, d_states, grads);

  auto f = [&](const Mat<double>& embed) {
    EncoderParams<double> probe = p;
    probe.char_embed = embed;
    return encode(chars, probe).sum();
  };
  Mat<double> numeric = numeric_gradient(f, p.char_embed, 1e-5);
  CHECK(max_rel_error(grads.char_embed, numeric) <= 1e-4);
  CHECK(grads.char_embed.col(0).cwiseAbs().maxCoeff() == 0.0);  // unused char
}
