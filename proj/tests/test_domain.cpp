#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "confide/dataset.hpp"
#include "confide/errors.hpp"
#include "confide/types.hpp"

using namespace confide;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("confide_domain_" + name);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("prob vector validation accepts and normalizes") {
    const auto v = ProbVector::validated(std::vector<double>{0.5, 0.5}, 2);
    CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-12));

    // exact zero gets clamped to the floor
    const auto w = ProbVector::validated(std::vector<double>{1.0, 0.0}, 2);
    CHECK(w[1] == kProbFloor);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("prob vector validation rejects bad input") {
    CHECK_THROWS_WITH_AS(ProbVector::validated(std::vector<double>{0.3, 0.3, 0.3}, 3),
                         doctest::Contains("BadSum"), Error);
    CHECK_THROWS_WITH_AS(ProbVector::validated(std::vector<double>{1.2, -0.2}, 2),
                         doctest::Contains("NegativeEntry"), Error);
    CHECK_THROWS_WITH_AS(ProbVector::validated(std::vector<double>{1.0}, 2),
                         doctest::Contains("WrongLength"), Error);
}

TEST_CASE("validated vectors sum to one and respect the floor") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 12);
        std::vector<double> raw(static_cast<std::size_t>(k));
        double sum = 0.0;
        for (double& x : raw) {
            x = std::pow(unif(rng), 8.0); // lots of near-zero entries
            sum += x;
        }
        for (double& x : raw) x /= sum;
        const auto v = ProbVector::validated(raw, k);
        double total = 0.0;
        for (int j = 0; j < k; ++j) {
            CHECK(v[static_cast<std::size_t>(j)] >= kProbFloor);
            total += v[static_cast<std::size_t>(j)];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("csv load infers K and counts supervised rows") {
    const auto path = temp_file("basic.csv");
    {
        std::ofstream out(path);
        out << "human_label,true_label,p_0,p_1\n";
        out << "0,1,0.2,0.8\n";
        out << "1,,0.6,0.4\n";
    }
    const auto data = load_dataset(path);
    CHECK(data.k() == 2);
    CHECK(data.size() == 2);
    CHECK(data.supervised_count() == 1);
    CHECK(data.rows()[0].human_label == 0);
    CHECK(*data.rows()[0].true_label == 1);
    CHECK_FALSE(data.rows()[1].true_label.has_value());
}

TEST_CASE("csv load rejects out-of-range labels with a line number") {
    const auto path = temp_file("badlabel.csv");
    {
        std::ofstream out(path);
        out << "human_label,true_label,p_0,p_1\n";
        out << "5,0,0.2,0.8\n";
    }
    try {
        load_dataset(path);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == "ParseError");
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("csv load rejects inconsistent probability counts") {
    const auto path = temp_file("badk.csv");
    {
        std::ofstream out(path);
        out << "human_label,true_label,p_0,p_1\n";
        out << "0,0,0.2,0.4,0.4\n";
    }
    CHECK_THROWS_AS(load_dataset(path), Error);
}

TEST_CASE("csv round trip preserves numeric content") {
    const auto path = temp_file("roundtrip.csv");
    {
        std::ofstream out(path);
        out << "human_label,true_label,p_0,p_1,p_2\n";
        out << "0,1,0.25,0.5,0.25\n";
        out << "2,,0.1234567890123456,0.5,0.3765432109876544\n";
    }
    const auto data = load_dataset(path);
    const auto copy_path = temp_file("roundtrip_copy.csv");
    save_dataset(data, copy_path);
    const auto reloaded = load_dataset(copy_path);
    REQUIRE(reloaded.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(reloaded.rows()[i].human_label == data.rows()[i].human_label);
        CHECK(reloaded.rows()[i].true_label == data.rows()[i].true_label);
        for (int j = 0; j < data.k(); ++j) {
            const double a = data.rows()[i].model_probs[static_cast<std::size_t>(j)];
            const double b = reloaded.rows()[i].model_probs[static_cast<std::size_t>(j)];
            CHECK(b == doctest::Approx(a).epsilon(1e-12));
        }
    }
}

TEST_CASE("jsonl round trip") {
    const auto path = temp_file("rows.jsonl");
    {
        std::ofstream out(path);
        out << R"({"h": 0, "y": 1, "m": [0.2, 0.8]})" << "\n";
        out << R"({"h": 1, "y": null, "m": [0.7, 0.3]})" << "\n";
    }
    const auto data = load_dataset(path);
    CHECK(data.k() == 2);
    CHECK(data.supervised_count() == 1);
    const auto copy_path = temp_file("rows_copy.jsonl");
    save_dataset(data, copy_path);
    const auto reloaded = load_dataset(copy_path);
    CHECK(reloaded.size() == 2);
    CHECK(reloaded.rows()[0].model_probs[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("split sizes follow the rounded eval fraction") {
    std::vector<Example> rows;
    for (int i = 0; i < 10; ++i) {
        Example row;
        row.human_label = i % 2;
        row.model_probs = ProbVector::validated(std::vector<double>{0.5, 0.5}, 2);
        row.true_label = i % 2;
        rows.push_back(row);
    }
    const CombinationDataset data(LabelSpace(2), rows);

    const auto [train, eval] = split_dataset(data, 0.3, 1);
    CHECK(train.size() == 7);
    CHECK(eval.size() == 3);

    const CombinationDataset two(LabelSpace(2), {rows[0], rows[1]});
    const auto [t2, e2] = split_dataset(two, 0.5, 1);
    CHECK(t2.size() == 1);
    CHECK(e2.size() == 1);
}

TEST_CASE("split is deterministic and an exact partition") {
    std::vector<Example> rows;
    for (int i = 0; i < 23; ++i) {
        Example row;
        row.human_label = i % 3;
        // distinct probability fingerprints so rows are identifiable
        const double a = 0.1 + 0.7 * static_cast<double>(i) / 23.0;
        row.model_probs = ProbVector::validated(std::vector<double>{a, 0.2, 0.8 - a}, 3);
        rows.push_back(row);
    }
    const CombinationDataset data(LabelSpace(3), rows);

    const auto [train1, eval1] = split_dataset(data, 0.3, 42);
    const auto [train2, eval2] = split_dataset(data, 0.3, 42);
    REQUIRE(train1.size() == train2.size());
    for (std::size_t i = 0; i < train1.size(); ++i)
        CHECK(train1.rows()[i].model_probs[0] == train2.rows()[i].model_probs[0]);

    std::multiset<double> fingerprints;
    for (const auto& row : data.rows()) fingerprints.insert(row.model_probs[0]);
    std::multiset<double> recovered;
    for (const auto& row : train1.rows()) recovered.insert(row.model_probs[0]);
    for (const auto& row : eval1.rows()) recovered.insert(row.model_probs[0]);
    CHECK(fingerprints == recovered);
}

TEST_CASE("split rejects empty sides") {
    Example row;
    row.human_label = 0;
    row.model_probs = ProbVector::validated(std::vector<double>{0.5, 0.5}, 2);
    const CombinationDataset one(LabelSpace(2), {row});
    CHECK_THROWS_WITH_AS(split_dataset(one, 0.3, 1), doctest::Contains("EmptySplit"), Error);
    CHECK_THROWS_AS(split_dataset(CombinationDataset(LabelSpace(2), {}), 0.3, 1), Error);
}

TEST_CASE("save then load is byte-stable") {
    std::vector<Example> rows;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 17; ++i) {
        Example row;
        row.human_label = static_cast<int>(rng() % 4);
        std::vector<double> p(4);
        double s = 0.0;
        for (double& x : p) {
            x = unif(rng);
            s += x;
        }
        for (double& x : p) x /= s;
        row.model_probs = ProbVector::validated(p, 4);
        if (i % 2 == 0) row.true_label = static_cast<int>(rng() % 4);
        rows.push_back(row);
    }
    const CombinationDataset data(LabelSpace(4), rows);
    const auto p1 = temp_file("stable1.csv");
    const auto p2 = temp_file("stable2.csv");
    save_dataset(data, p1);
    save_dataset(load_dataset(p1), p2);
    CHECK(slurp(p1) == slurp(p2));
}
