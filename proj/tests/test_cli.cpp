#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "distill/cli.hpp"
#include "distill/config.hpp"

using namespace distill;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string pipeline_config(const std::string& out_dir) {
    return "# exact-oracle smoke pipeline\n"
           "[env]\n"
           "id = gridworld\n"
           "width = 3\n"
           "height = 3\n"
           "gamma = 0.9\n"
           "horizon = 50\n"
           "start_state = 0\n"
           "\n"
           "[expert]\n"
           "method = value-iteration\n"
           "\n"
           "[collect]\n"
           "n_trajectories = 4\n"
           "seed = 5\n"
           "\n"
           "[distill]\n"
           "iterations = 400\n"
           "lambda = 0.05\n"
           "eta = 0.01\n"
           "log_every = 100\n"
           "\n"
           "[eval]\n"
           "n_episodes = 5\n"
           "seeds = 1,2\n"
           "\n"
           "[out]\n"
           "dir = " +
           out_dir + "\n";
}

}  // namespace

TEST_CASE("ini parsing rejects malformed input") {
    CHECK_THROWS_AS(IniFile::parse_string("[nosuch]\n"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("[env]\nid = a\nid = b\n"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("[env]\n[env]\n"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("key = value\n"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("[env\n"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("[env]\njust some text\n"), ConfigError);
    CHECK_THROWS_AS(IniFile::parse_string("[env]\n= value\n"), ConfigError);

    try {
        IniFile::parse_string("[env]\nid = x\nbroken line\n");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    IniFile ok = IniFile::parse_string(
        "# comment\n; another\n\n[env]\nid = gridworld  \n  width=5\n");
    CHECK(ok.sections.at("env").at("id") == "gridworld");
    CHECK(ok.sections.at("env").at("width") == "5");
}

TEST_CASE("run config typed accessors") {
    SUBCASE("pendulum env") {
        RunConfig cfg = RunConfig::from_string("[env]\nid = pendulum-sine\nactions = 64\n");
        EnvConfig env = cfg.env();
        auto* p = std::get_if<PendulumConfig>(&env);
        REQUIRE(p);
        CHECK(p->n_actions == 64);
        CHECK(p->horizon == 500);
    }

    SUBCASE("lob env") {
        RunConfig cfg = RunConfig::from_string(
            "[env]\nid = lob-synth\nfeatures = 6\nkappa = 0.5\nsigma = 0.1\n");
        EnvConfig env = cfg.env();
        auto* l = std::get_if<LobConfig>(&env);
        REQUIRE(l);
        CHECK(l->n_features == 6);
        CHECK(l->kappa == 0.5);
        CHECK(l->sigma == 0.1);
    }

    SUBCASE("gridworld env with xy encoding") {
        RunConfig cfg =
            RunConfig::from_string("[env]\nid = gridworld\nencoding = xy\nwidth = 5\n");
        EnvConfig env = cfg.env();
        auto* g = std::get_if<GridworldConfig>(&env);
        REQUIRE(g);
        CHECK(g->encoding == GridEncoding::XY);
        CHECK(g->width == 5);
    }

    SUBCASE("bad env settings") {
        CHECK_THROWS_AS(RunConfig::from_string("[env]\nid = nosuch\n").env(), ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[env]\nid = gridworld\nencoding = polar\n").env(),
                        ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[env]\nid = pendulum-sine\nfeatures = 3\n").env(),
                        ConfigError);  // lob-only key
        CHECK_THROWS_AS(RunConfig::from_string("[env]\nid = pendulum-sine\nactions = ten\n").env(),
                        ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[env]\nwidth = 3\n").env(), ConfigError);
    }

    SUBCASE("expert section") {
        RunConfig cfg = RunConfig::from_string(
            "[expert]\nmethod = fqi\ngamma = 0.95\ntrees = 25\nexploration = sticky\nseed = 9\n");
        CHECK(cfg.expert_method() == "fqi");
        ExpertTrainConfig ec = cfg.expert();
        CHECK(ec.gamma == 0.95);
        CHECK(ec.trees.n_trees == 25);
        CHECK(ec.exploration == Exploration::Sticky);
        CHECK(cfg.expert_seed() == 9);

        CHECK_THROWS_AS(RunConfig::from_string("[expert]\nmethod = dqn\n").expert_method(),
                        ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[expert]\nlayers = 3\n").expert(), ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[expert]\nexploration = brownian\n").expert(),
                        ConfigError);
    }

    SUBCASE("collect, distill, eval, out sections") {
        RunConfig cfg = RunConfig::from_string(
            "[collect]\nn_trajectories = 7\n[distill]\niterations = 50\nlambda = 0.2\neta = "
            "0.5\n[eval]\nseeds = 1, 2,3\ntarget = expert\n[out]\ndir = somewhere\n");
        CHECK(cfg.collect_n_trajectories() == 7);
        CHECK(cfg.collect_seed() == 0);
        DistillConfig dc = cfg.distill();
        CHECK(dc.n_iterations == 50);
        CHECK(dc.learning_rate == 0.2);
        CHECK(dc.bc_weight == 0.5);
        CHECK(cfg.eval_seeds() == std::vector<std::uint64_t>{1, 2, 3});
        CHECK(cfg.eval_target() == "expert");
        CHECK(cfg.eval_n_episodes() == 10);
        CHECK(cfg.out_dir() == "somewhere");

        CHECK_THROWS_AS(RunConfig::from_string("[collect]\nseed = 1\n").collect_n_trajectories(),
                        ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[out]\npath = x\n").out_dir(), ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[eval]\ntarget = both\n").eval_target(),
                        ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[distill]\nmomentum = 0.9\n").distill(),
                        ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("[env]\nid = gridworld\n").out_dir(), ConfigError);
    }
}

TEST_CASE("cli rejects bad invocations") {
    CHECK(cli_main({}) == 2);
    CHECK(cli_main({"transmogrify"}) == 2);
    CHECK(cli_main({"--help"}) == 0);
    CHECK(cli_main({"distill"}) == 2);              // no --config
    CHECK(cli_main({"train-expert", "--config", "/nonexistent/path.ini"}) == 2);
    CHECK(cli_main({"verify-bound", "--instances", "5", "--gammas", "1.5", "--out",
                    (fs::temp_directory_path() / "distill_cli_badgamma").string()}) == 2);
    CHECK(cli_main({"verify-bound", "--instances", "5", "--gammas", "abc", "--out",
                    (fs::temp_directory_path() / "distill_cli_badgamma").string()}) == 2);

    fs::path dir = fresh_dir("distill_cli_missing_inputs");
    write_file(dir / "run.ini", pipeline_config((dir / "run").string()));
    std::string cfg = (dir / "run.ini").string();
    CHECK(cli_main({"collect", "--config", cfg}) == 2);  // expert.json not written yet
    CHECK(cli_main({"distill", "--config", cfg}) == 2);
    CHECK(cli_main({"eval", "--config", cfg}) == 2);
    fs::remove_all(dir);
}

TEST_CASE("full pipeline over the exact gridworld") {
    fs::path dir = fresh_dir("distill_cli_pipeline");
    fs::path run = dir / "run";
    write_file(dir / "run.ini", pipeline_config(run.string()));
    std::string cfg = (dir / "run.ini").string();

    REQUIRE(cli_main({"train-expert", "--config", cfg}) == 0);
    REQUIRE(fs::exists(run / "expert.json"));
    nlohmann::json expert = nlohmann::json::parse(slurp(run / "expert.json"));
    CHECK(expert.at("kind") == "tabular");
    CHECK(expert.at("env") == "gridworld");
    CHECK(expert.at("eval_mean_return").get<double>() == doctest::Approx(1.0));

    REQUIRE(cli_main({"collect", "--config", cfg}) == 0);
    REQUIRE(fs::exists(run / "dataset.jsonl"));

    REQUIRE(cli_main({"distill", "--config", cfg}) == 0);
    REQUIRE(fs::exists(run / "policy.json"));
    REQUIRE(fs::exists(run / "trace.csv"));
    CHECK(slurp(run / "trace.csv").rfind("iter,J_hat,L_hat,grad_norm_adv,grad_norm_bc\n", 0) ==
          0);

    REQUIRE(cli_main({"eval", "--config", cfg}) == 0);
    REQUIRE(fs::exists(run / "eval.csv"));
    CHECK(slurp(run / "eval.csv").rfind("seed,mean_return\n", 0) == 0);

    REQUIRE(cli_main({"report", "--config", cfg}) == 0);
    REQUIRE(fs::exists(run / "weights_gridworld.csv"));
    CHECK(slurp(run / "weights_gridworld.csv").rfind("action,feature,weight\n", 0) == 0);
    CHECK(fs::exists(run / "trace_gridworld.svg"));

    SUBCASE("bc-only variant and expert eval") {
        REQUIRE(cli_main({"distill", "--config", cfg, "--bc-only"}) == 0);
        fs::path alt = dir / "expert_eval.ini";
        std::string text = pipeline_config(run.string());
        text.insert(text.find("[eval]\n") + 7, "target = expert\n");
        write_file(alt, text);
        REQUIRE(cli_main({"eval", "--config", alt.string()}) == 0);
    }

    fs::remove_all(dir);
}

TEST_CASE("repeated runs emit identical bytes") {
    fs::path dir = fresh_dir("distill_cli_rerun");
    fs::path run_a = dir / "a";
    fs::path run_b = dir / "b";
    write_file(dir / "run.ini", pipeline_config(run_a.string()));
    std::string cfg = (dir / "run.ini").string();

    for (const fs::path& out : {run_a, run_b}) {
        std::string o = out.string();
        REQUIRE(cli_main({"train-expert", "--config", cfg, "--out", o}) == 0);
        REQUIRE(cli_main({"collect", "--config", cfg, "--out", o}) == 0);
        REQUIRE(cli_main({"distill", "--config", cfg, "--out", o}) == 0);
        REQUIRE(cli_main({"eval", "--config", cfg, "--out", o}) == 0);
        REQUIRE(cli_main({"verify-bound", "--instances", "50", "--out", o}) == 0);
    }
    for (const char* name :
         {"expert.json", "dataset.jsonl", "policy.json", "trace.csv", "eval.csv",
          "bound_sweep.csv"}) {
        CAPTURE(name);
        CHECK(slurp(run_a / name) == slurp(run_b / name));
    }
    fs::remove_all(dir);
}

TEST_CASE("installed binary runs the same pipeline") {
    fs::path dir = fresh_dir("distill_cli_subprocess");
    std::string exe = DISTILL_CLI_PATH;
    std::string out = (dir / "sweep").string();

    std::string cmd = exe + " verify-bound --instances 20 --max-states 4 --max-actions 3 --out " +
                      out + " > " + (dir / "stdout.txt").string();
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    CHECK(WEXITSTATUS(rc) == 0);
    REQUIRE(fs::exists(fs::path(out) / "bound_sweep.csv"));
    std::string text = slurp(fs::path(out) / "bound_sweep.csv");
    CHECK(text.rfind("instance,gamma,lhs,adv_term,penalty,slack,holds\n", 0) == 0);
    CHECK(slurp(dir / "stdout.txt").find("0 violations") != std::string::npos);

    int rc_bad = std::system((exe + " no-such-command 2> /dev/null").c_str());
    REQUIRE(rc_bad != -1);
    CHECK(WEXITSTATUS(rc_bad) == 2);
    fs::remove_all(dir);
}
