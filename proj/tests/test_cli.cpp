#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "aurc/io.hpp"

#include "test_support.hpp"

using testsupport::TempFile;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

// Runs the CLI binary named by $AURC_CLI, capturing stdout+stderr.
RunResult run_cli(const std::string& args) {
    const char* binary = std::getenv("AURC_CLI");
    REQUIRE(binary != nullptr);
    TempFile capture(".out");
    const std::string cmd =
        std::string(binary) + " " + args + " > " + capture.path() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.output = capture.read();
    return result;
}

const char* kSmallJsonl =
    "{\"logits\":[2.0,0.5],\"label\":0}\n"
    "{\"logits\":[0.1,0.9],\"label\":0}\n"
    "{\"logits\":[0.4,0.3],\"label\":1}\n"
    "{\"logits\":[3.0,-1.0],\"label\":0}\n"
    "{\"logits\":[-0.2,0.8],\"label\":1}\n";

} // namespace

TEST_CASE("counterexample subcommand") {
    const auto res = run_cli("counterexample");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("2.28333333333") != std::string::npos);
    CHECK(res.output.find("0.456666666667") != std::string::npos);
    CHECK(res.output.find("0.4") != std::string::npos);
    CHECK(res.output.find("upper bound fails") != std::string::npos);

    SECTION("zero loss is the degenerate equality") {
        const auto zero = run_cli("counterexample --loss-value 0");
        CHECK(zero.exit_code == 1);
    }
}

TEST_CASE("evaluate subcommand") {
    TempFile data(".jsonl");
    data.write(kSmallJsonl);

    SECTION("reports every requested estimator") {
        const auto res = run_cli("evaluate --input " + data.path() +
                                 " --loss 01 --csf msp "
                                 "--weights alpha,alpha-prime,sele,sele2,naive");
        REQUIRE(res.exit_code == 0);
        std::istringstream lines(res.output);
        std::string line;
        std::getline(lines, line);
        CHECK(line == "estimator,value,n,loss,csf,tie_policy,seed");
        int rows = 0;
        while (std::getline(lines, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 5);
        CHECK(res.output.find("plugin_alpha_hat") != std::string::npos);
        CHECK(res.output.find("naive_empirical") != std::string::npos);
    }

    SECTION("values match the library on the same data") {
        const auto res = run_cli("evaluate --input " + data.path() +
                                 " --loss 01 --csf msp --weights alpha");
        REQUIRE(res.exit_code == 0);

        const auto ds = aurc::load_dataset(data.path(), aurc::DatasetFormat::jsonl);
        std::vector<double> losses, scores;
        for (const auto& rec : ds.records) {
            losses.push_back(aurc::zero_one_loss(rec));
            scores.push_back(aurc::confidence_score(rec, aurc::CsfKind::msp));
        }
        const double expected =
            aurc::plugin_aurc(losses, scores, aurc::WeightKind::alpha_hat).value;
        CHECK(res.output.find(aurc::format_real(expected)) != std::string::npos);
    }

    SECTION("monotone-equivalent CSFs give identical values for k=2") {
        // msp and neg-gini are increasing functions of each other on
        // two classes, so every rank-based estimate coincides
        const auto msp = run_cli("evaluate --input " + data.path() +
                                 " --loss 01 --csf msp --weights alpha,alpha-prime,sele");
        const auto gini = run_cli("evaluate --input " + data.path() +
                                  " --loss 01 --csf neg-gini "
                                  "--weights alpha,alpha-prime,sele");
        REQUIRE(msp.exit_code == 0);
        REQUIRE(gini.exit_code == 0);
        auto strip_csf = [](std::string text) {
            std::string::size_type pos;
            while ((pos = text.find("msp")) != std::string::npos) text.erase(pos, 3);
            while ((pos = text.find("neg_gini")) != std::string::npos) text.erase(pos, 8);
            return text;
        };
        CHECK(strip_csf(msp.output) == strip_csf(gini.output));
    }

    SECTION("cross-entropy loss and JSON output") {
        TempFile out(".json");
        const auto res = run_cli("evaluate --input " + data.path() +
                                 " --loss ce --csf msp --weights alpha --format json "
                                 "--output " + out.path());
        REQUIRE(res.exit_code == 0);
        const auto parsed = nlohmann::json::parse(out.read());
        CHECK(parsed["reports"][0]["loss"] == "cross_entropy");
        CHECK(parsed["provenance"]["seed"] == 42);
    }

    SECTION("empty file exits 2") {
        TempFile empty(".jsonl");
        empty.write("");
        const auto res = run_cli("evaluate --input " + empty.path() + " --weights alpha");
        CHECK(res.exit_code == 2);
    }

    SECTION("missing file exits 2 with the path in the message") {
        const auto res = run_cli("evaluate --input /no/such/file.jsonl --weights alpha");
        CHECK(res.exit_code == 2);
        CHECK(res.output.find("file.jsonl") != std::string::npos);
    }

    SECTION("csv input by extension") {
        TempFile csv(".csv");
        csv.write("label,logit_0,logit_1\n0,2.0,1.0\n1,0.1,0.9\n");
        const auto res = run_cli("evaluate --input " + csv.path() + " --weights alpha");
        CHECK(res.exit_code == 0);
    }
}

TEST_CASE("usage errors") {
    CHECK(run_cli("--definitely-not-a-flag").exit_code == 2);
    CHECK(run_cli("evaluate").exit_code == 2);            // missing --input
    CHECK(run_cli("nonexistent-subcommand").exit_code == 2);
    TempFile data(".jsonl");
    data.write(kSmallJsonl);
    CHECK(run_cli("evaluate --input " + data.path() + " --loss bogus").exit_code == 2);
    CHECK(run_cli("evaluate --input " + data.path() + " --weights bogus").exit_code == 2);

    const auto help = run_cli("--help");
    CHECK(help.exit_code == 0);
    for (const char* sub : {"evaluate", "bias", "mse", "converge", "counterexample"})
        CHECK(help.output.find(sub) != std::string::npos);
}

TEST_CASE("bias subcommand") {
    SECTION("closed form only by default") {
        const auto res = run_cli("bias --n 8 --weights alpha");
        REQUIRE(res.exit_code == 0);
        std::istringstream lines(res.output);
        std::string header;
        std::getline(lines, header);
        CHECK(header == "quantity,n,beta_or_rank,closed_form");
        int rows = 0;
        std::string line;
        while (std::getline(lines, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 19); // beta = 0.05..0.95 step 0.05
    }

    SECTION("--mc adds columns and stays reproducible") {
        const std::string cmd = "bias --n 8 --weights sele --mc 2000 --seed 7";
        const auto a = run_cli(cmd);
        const auto b = run_cli(cmd);
        REQUIRE(a.exit_code == 0);
        CHECK(a.output.find("mc_estimate,mc_stderr,mc_reps") != std::string::npos);
        CHECK(a.output == b.output);
    }
}

TEST_CASE("mse subcommand") {
    const auto res = run_cli("mse --n 8 --beta-start 0.25 --beta-stop 0.75 --beta-step 0.25");
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("mse_alpha_hat") != std::string::npos);
    CHECK(res.output.find("mse_alpha_prime") != std::string::npos);
    CHECK(res.output.find("mse_bound") != std::string::npos);
}

TEST_CASE("converge subcommand") {
    SECTION("synthetic population, deterministic output") {
        const std::string cmd =
            "converge --population-size 2048 --sizes 8,32 --reps 2 --seed 5 --format json";
        const auto a = run_cli(cmd);
        const auto b = run_cli(cmd);
        REQUIRE(a.exit_code == 0);
        CHECK(a.output == b.output);
        const auto parsed = nlohmann::json::parse(a.output);
        CHECK(parsed["rows"].size() == 2 * 4);
        CHECK(parsed["rate_slopes"].contains("plugin_alpha_hat"));
        CHECK(parsed["population_value"].is_number());
    }

    SECTION("thread count does not change results") {
        const auto one = run_cli(
            "converge --population-size 2048 --sizes 8,32 --reps 2 --seed 5 --threads 1");
        const auto four = run_cli(
            "converge --population-size 2048 --sizes 8,32 --reps 2 --seed 5 --threads 4");
        CHECK(one.output == four.output);
    }

    SECTION("file-backed study") {
        TempFile data(".jsonl");
        std::ostringstream body;
        for (int i = 0; i < 64; ++i) {
            const double a = (i * 37 % 19) / 10.0 - 0.5;
            const double b = (i * 17 % 13) / 10.0;
            body << "{\"logits\":[" << a << "," << b << "],\"label\":" << (i % 2) << "}\n";
        }
        data.write(body.str());
        const auto res = run_cli("converge --input " + data.path() +
                                 " --sizes 8,16 --reps 2 --estimators alpha,sele");
        REQUIRE(res.exit_code == 0);
        CHECK(res.output.find("batch_size,estimator,mean,std,mae,mse,n_batches") !=
              std::string::npos);
    }
}
