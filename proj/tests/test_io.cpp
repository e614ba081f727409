#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include <json.hpp>

#include "aurc/io.hpp"

#include "test_support.hpp"

using namespace aurc;
using testsupport::TempFile;

TEST_CASE("jsonl loading") {
    TempFile file(".jsonl");

    SECTION("happy path infers k") {
        file.write("{\"logits\":[0.1,0.9],\"label\":1}\n"
                   "{\"logits\":[2.0,-1.0],\"label\":0}\n"
                   "\n");
        const auto ds = load_dataset(file.path(), DatasetFormat::jsonl);
        REQUIRE(ds.k == 2);
        REQUIRE(ds.records.size() == 2);
        CHECK(ds.records[0].label == 1);
        CHECK(ds.records[1].logits == std::vector<double>{2.0, -1.0});
    }

    SECTION("malformed JSON names the line") {
        file.write("{\"logits\":[0.1,0.9],\"label\":1}\n"
                   "{\"logits\":[0.1,0.9,\n");
        try {
            load_dataset(file.path(), DatasetFormat::jsonl);
            FAIL("expected throw");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }

    SECTION("inconsistent class count names the offending line") {
        file.write("{\"logits\":[0.1,0.9],\"label\":1}\n"
                   "{\"logits\":[0.1,0.9],\"label\":0}\n"
                   "{\"logits\":[1.0,2.0,3.0],\"label\":0}\n");
        try {
            load_dataset(file.path(), DatasetFormat::jsonl);
            FAIL("expected throw");
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find(":3:") != std::string::npos);
            CHECK(msg.find("expected 2 logits") != std::string::npos);
        }
    }

    SECTION("label out of range rejected") {
        file.write("{\"logits\":[0.1,0.9],\"label\":2}\n");
        CHECK_THROWS_AS(load_dataset(file.path(), DatasetFormat::jsonl),
                        std::runtime_error);
    }

    SECTION("missing file carries the path") {
        try {
            load_dataset("/nonexistent/nowhere.jsonl", DatasetFormat::jsonl);
            FAIL("expected throw");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("nowhere.jsonl") != std::string::npos);
        }
    }
}

TEST_CASE("csv loading") {
    TempFile file(".csv");

    SECTION("happy path") {
        file.write("label,logit_0,logit_1\n0,2.0,1.0\n1,-0.5,3.25\n");
        const auto ds = load_dataset(file.path(), DatasetFormat::csv);
        REQUIRE(ds.k == 2);
        REQUIRE(ds.records.size() == 2);
        CHECK(ds.records[0].label == 0);
        CHECK(ds.records[0].logits == std::vector<double>{2.0, 1.0});
    }

    SECTION("CRLF is tolerated") {
        file.write("label,logit_0,logit_1\r\n0,2.0,1.0\r\n");
        const auto ds = load_dataset(file.path(), DatasetFormat::csv);
        CHECK(ds.records.size() == 1);
    }

    SECTION("bad header rejected") {
        file.write("label,logit_1,logit_0\n0,2.0,1.0\n");
        CHECK_THROWS_AS(load_dataset(file.path(), DatasetFormat::csv), std::runtime_error);
    }

    SECTION("wrong column count names the line") {
        file.write("label,logit_0,logit_1\n0,2.0,1.0\n1,3.0\n");
        try {
            load_dataset(file.path(), DatasetFormat::csv);
            FAIL("expected throw");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(":3:") != std::string::npos);
        }
    }

    SECTION("unparsable number names line and field") {
        file.write("label,logit_0,logit_1\n0,2.0,abc\n");
        try {
            load_dataset(file.path(), DatasetFormat::csv);
            FAIL("expected throw");
        } catch (const std::runtime_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find(":2:") != std::string::npos);
            CHECK(msg.find("logit") != std::string::npos);
        }
    }
}

TEST_CASE("dataset round trip is bit exact") {
    std::mt19937_64 gen(33);
    std::normal_distribution<double> normal(0.0, 3.0);
    std::vector<LogitsRecord> records(50);
    for (auto& rec : records) {
        rec.logits.resize(4);
        for (auto& z : rec.logits) z = normal(gen);
        rec.label = static_cast<int>(gen() % 4);
    }
    for (DatasetFormat format : {DatasetFormat::csv, DatasetFormat::jsonl}) {
        TempFile file(format == DatasetFormat::csv ? ".csv" : ".jsonl");
        {
            std::ofstream out(file.path());
            write_dataset(out, records, format);
        }
        const auto ds = load_dataset(file.path(), format);
        REQUIRE(ds.records.size() == records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            REQUIRE(ds.records[i].label == records[i].label);
            REQUIRE(ds.records[i].logits == records[i].logits); // bitwise
        }
    }
}

TEST_CASE("streaming visitor sees line numbers") {
    TempFile file(".jsonl");
    file.write("{\"logits\":[0.1,0.9],\"label\":1}\n"
               "\n"
               "{\"logits\":[0.3,0.4],\"label\":0}\n");
    std::ifstream in(file.path());
    std::vector<std::size_t> lines;
    for_each_record(in, DatasetFormat::jsonl, file.path(),
                    [&](const LogitsRecord&, std::size_t line) { lines.push_back(line); });
    CHECK(lines == std::vector<std::size_t>{1, 3});
}

TEST_CASE("real formatting uses 12 significant digits") {
    CHECK(format_real(1.0 / 3.0) == "0.333333333333");
    CHECK(format_real(0.45666666666666667) == "0.456666666667");
    CHECK(format_real(2.0) == "2");
    CHECK(format_real(-1.2345678901234e-7) == "-1.23456789012e-07");
}

TEST_CASE("estimator report serialization") {
    EstimatorReport rep;
    rep.estimator = EstimatorKind::plugin_alpha_hat;
    rep.value = 0.45666666666666667;
    rep.n = 5;
    rep.tie_policy = TiePolicy::stable;
    rep.loss_kind = LossKind::zero_one;
    rep.csf_kind = CsfKind::msp;
    rep.seed = 42;
    const Provenance prov{42, "evaluate --input x.jsonl"};

    SECTION("csv layout is stable") {
        std::ostringstream out;
        write_estimator_reports(out, std::vector<EstimatorReport>{rep}, prov,
                                ReportFormat::csv);
        CHECK(out.str() ==
              "estimator,value,n,loss,csf,tie_policy,seed\n"
              "plugin_alpha_hat,0.456666666667,5,zero_one,msp,stable,42\n");
    }

    SECTION("json parses back with provenance intact") {
        std::ostringstream out;
        write_estimator_reports(out, std::vector<EstimatorReport>{rep}, prov,
                                ReportFormat::json);
        const auto parsed = nlohmann::json::parse(out.str());
        CHECK(parsed["provenance"]["seed"] == 42);
        CHECK(parsed["provenance"]["config"] == "evaluate --input x.jsonl");
        CHECK(parsed["provenance"]["config_hash"].is_string());
        REQUIRE(parsed["reports"].size() == 1);
        CHECK(parsed["reports"][0]["estimator"] == "plugin_alpha_hat");
        CHECK(parsed["reports"][0]["n"] == 5);
    }
}

TEST_CASE("convergence table serialization") {
    ConvergenceTable table;
    table.population_value = 0.25;
    table.rate_slopes = {{EstimatorKind::plugin_alpha_hat, 1.07}};
    ConvergenceRow row;
    row.batch_size = 8;
    row.estimator = EstimatorKind::sele;
    row.mean = 0.2;
    row.stddev = 0.01;
    row.mae = 0.05;
    row.mse = 0.003;
    row.n_batches = 128;
    table.rows.push_back(row);
    const Provenance prov{7, "converge"};

    std::ostringstream csv;
    write_convergence_table(csv, table, prov, ReportFormat::csv);
    CHECK(csv.str() ==
          "batch_size,estimator,mean,std,mae,mse,n_batches\n"
          "8,sele,0.2,0.01,0.05,0.003,128\n");

    std::ostringstream json;
    write_convergence_table(json, table, prov, ReportFormat::json);
    const auto parsed = nlohmann::json::parse(json.str());
    CHECK(parsed["population_value"] == 0.25);
    CHECK(parsed["rate_slopes"]["plugin_alpha_hat"] == 1.07);
    CHECK(parsed["rows"][0]["estimator"] == "sele");
}

TEST_CASE("bias/mse curve serialization") {
    BiasMseCurve curve;
    curve.quantity = BiasMseQuantity::bias_alpha_hat;
    curve.n = 8;
    curve.points.push_back(CurvePoint{0.5, 0.124, std::nullopt, std::nullopt, std::nullopt});

    SECTION("no MC columns without MC data") {
        std::ostringstream out;
        write_bias_mse_curves(out, std::vector<BiasMseCurve>{curve}, Provenance{1, "bias"},
                              ReportFormat::csv);
        CHECK(out.str() ==
              "quantity,n,beta_or_rank,closed_form\n"
              "bias_alpha_hat,8,0.5,0.124\n");
    }

    SECTION("MC columns appear when any point has them") {
        curve.points.push_back(CurvePoint{0.6, 0.1, 0.101, 0.002, 1000});
        std::ostringstream out;
        write_bias_mse_curves(out, std::vector<BiasMseCurve>{curve}, Provenance{1, "bias"},
                              ReportFormat::csv);
        CHECK(out.str() ==
              "quantity,n,beta_or_rank,closed_form,mc_estimate,mc_stderr,mc_reps\n"
              "bias_alpha_hat,8,0.5,0.124,,,\n"
              "bias_alpha_hat,8,0.6,0.1,0.101,0.002,1000\n");

        std::ostringstream json;
        write_bias_mse_curves(json, std::vector<BiasMseCurve>{curve}, Provenance{1, "bias"},
                              ReportFormat::json);
        const auto parsed = nlohmann::json::parse(json.str());
        CHECK(parsed["curves"][0]["points"][1]["mc_reps"] == 1000);
        CHECK_FALSE(parsed["curves"][0]["points"][0].contains("mc_estimate"));
    }
}

TEST_CASE("config hashing is stable") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") != fnv1a64("b"));
    CHECK(fnv1a64("evaluate --seed 42") == fnv1a64("evaluate --seed 42"));
}

TEST_CASE("write_file surfaces path errors") {
    CHECK_THROWS_AS(write_file("/nonexistent/dir/out.csv", [](std::ostream&) {}),
                    std::runtime_error);
}
