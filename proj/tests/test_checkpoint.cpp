#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "uql/agent.hpp"
#include "uql/checkpoint.hpp"
#include "uql/mdp.hpp"
#include "uql/oracle.hpp"
#include "uql/rng.hpp"

using namespace uql;

namespace {

namespace fs = std::filesystem;

TabularMdp small_mdp() {
  TabularMdp mdp;
  mdp.num_states = 3;
  mdp.num_actions = 2;
  mdp.discount = 0.9;
  mdp.transition = {
      0.0, 0.5, 0.5,
      0.0, 0.0, 1.0,
      0.5, 0.0, 0.5,
      0.0, 0.0, 1.0,
      0.0, 0.0, 1.0,
      0.0, 0.0, 1.0,
  };
  mdp.reward_mean = {0.25, 1.0, 0.5, 0.25, 0.0, 0.0};
  mdp.terminal = {0, 0, 1};
  mdp.start_dist = {1.0, 0.0, 0.0};
  mdp.finalize();
  return mdp;
}

AgentConfig agent_config() {
  AgentConfig cfg;
  cfg.ensemble_size = 3;
  cfg.kappa = 0.5;
  cfg.init.kind = QInitKind::random_uniform;
  cfg.target_sync_interval = 4;
  cfg.learning_rate.kind = LearningRateKind::polynomial;
  return cfg;
}

void drive(const TabularMdp& mdp, UqlAgent& agent, Rng& rng, int updates) {
  for (int u = 0; u < updates; ++u) {
    auto [s, a] = uniform_sa_sampler(mdp, rng);
    Transition t = sample_step(mdp, s, a, rng);
    agent.update_batch({&t, 1}, mdp.discount);
  }
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("a resumed run is bitwise identical to an uninterrupted one") {
  TabularMdp mdp = small_mdp();
  fs::path path = temp_file("uql_ckpt_resume.txt");

  // Uninterrupted: 60 updates straight through.
  Rng init_a(11);
  UqlAgent straight(mdp.num_states, mdp.num_actions, agent_config(), init_a);
  Rng rng_a(12);
  drive(mdp, straight, rng_a, 60);

  // Interrupted: 35 updates, checkpoint, reload into a fresh agent, 25 more.
  Rng init_b(11);
  UqlAgent first_half(mdp.num_states, mdp.num_actions, agent_config(), init_b);
  Rng rng_b(12);
  drive(mdp, first_half, rng_b, 35);
  save_checkpoint(path.string(), first_half, rng_b);

  Rng init_c(999);  // deliberately different; load overwrites everything
  UqlAgent resumed(mdp.num_states, mdp.num_actions, agent_config(), init_c);
  Rng rng_c(0);
  load_checkpoint(path.string(), resumed, rng_c);
  CHECK(rng_c.state() == rng_b.state());
  CHECK(resumed.update_rounds() == 35);
  drive(mdp, resumed, rng_c, 25);

  REQUIRE(resumed.members().size() == straight.members().size());
  for (std::size_t k = 0; k < straight.members().size(); ++k) {
    CHECK(sup_norm_diff(resumed.members()[k], straight.members()[k]) == 0.0);
    CHECK(sup_norm_diff(resumed.targets()[k], straight.targets()[k]) == 0.0);
  }
  CHECK(resumed.update_rounds() == straight.update_rounds());
  CHECK(resumed.visit_counts() == straight.visit_counts());
  fs::remove(path);
}

TEST_CASE("shape and ensemble mismatches are rejected") {
  TabularMdp mdp = small_mdp();
  fs::path path = temp_file("uql_ckpt_shape.txt");
  Rng init(21);
  UqlAgent agent(mdp.num_states, mdp.num_actions, agent_config(), init);
  Rng rng(22);
  drive(mdp, agent, rng, 10);
  save_checkpoint(path.string(), agent, rng);

  SUBCASE("different ensemble size") {
    AgentConfig cfg = agent_config();
    cfg.ensemble_size = 2;
    Rng i2(0);
    UqlAgent other(mdp.num_states, mdp.num_actions, cfg, i2);
    Rng r2(0);
    CHECK_THROWS_WITH_AS(load_checkpoint(path.string(), other, r2),
                         doctest::Contains("shape mismatch"), std::runtime_error);
  }
  SUBCASE("different table shape") {
    Rng i2(0);
    UqlAgent other(mdp.num_states + 1, mdp.num_actions, agent_config(), i2);
    Rng r2(0);
    CHECK_THROWS_WITH_AS(load_checkpoint(path.string(), other, r2),
                         doctest::Contains("shape mismatch"), std::runtime_error);
  }
  fs::remove(path);
}

TEST_CASE("malformed checkpoint files are rejected") {
  TabularMdp mdp = small_mdp();
  Rng init(31);
  UqlAgent agent(mdp.num_states, mdp.num_actions, agent_config(), init);
  Rng rng(32);

  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(
        load_checkpoint("/nonexistent/uql_ckpt.txt", agent, rng),
        doctest::Contains("cannot read checkpoint"), std::runtime_error);
  }
  SUBCASE("wrong header") {
    fs::path path = temp_file("uql_ckpt_header.txt");
    std::ofstream(path) << "not-a-checkpoint\n";
    CHECK_THROWS_WITH_AS(load_checkpoint(path.string(), agent, rng),
                         doctest::Contains("bad header"), std::runtime_error);
    fs::remove(path);
  }
  SUBCASE("truncated body") {
    fs::path full = temp_file("uql_ckpt_full.txt");
    drive(mdp, agent, rng, 5);
    save_checkpoint(full.string(), agent, rng);
    std::ifstream in(full);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    fs::path cut = temp_file("uql_ckpt_cut.txt");
    std::ofstream(cut) << text.substr(0, text.size() / 2);
    Rng i2(0);
    UqlAgent fresh(mdp.num_states, mdp.num_actions, agent_config(), i2);
    Rng r2(0);
    CHECK_THROWS_AS(load_checkpoint(cut.string(), fresh, r2),
                    std::runtime_error);
    fs::remove(full);
    fs::remove(cut);
  }
}

TEST_CASE("save fails loudly on an unwritable path") {
  TabularMdp mdp = small_mdp();
  Rng init(41);
  UqlAgent agent(mdp.num_states, mdp.num_actions, agent_config(), init);
  Rng rng(42);
  CHECK_THROWS_WITH_AS(
      save_checkpoint("/nonexistent_dir/uql_ckpt.txt", agent, rng),
      doctest::Contains("cannot write checkpoint"), std::runtime_error);
}
