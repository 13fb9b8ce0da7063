#include "confide/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "confide/errors.hpp"
#include "confide/rng.hpp"

namespace confide {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw Error("ParseError", "line " + std::to_string(line_no) + ": " + what);
}

int parse_label(const std::string& s, std::size_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) parse_fail(line_no, std::string("bad ") + what + " '" + s + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        parse_fail(line_no, std::string("bad ") + what + " '" + s + "'");
    }
}

double parse_prob(const std::string& s, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) parse_fail(line_no, "bad probability '" + s + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        parse_fail(line_no, "bad probability '" + s + "'");
    }
}

CombinationDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error("ParseError", "line 1: empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "human_label" || header[1] != "true_label")
        throw Error("ParseError", "line 1: expected header human_label,true_label,p_0,...");
    const int k = static_cast<int>(header.size()) - 2;
    for (int j = 0; j < k; ++j)
        if (header[static_cast<std::size_t>(j) + 2] != "p_" + std::to_string(j))
            throw Error("ParseError", "line 1: bad probability column name");

    const LabelSpace space(k);
    CombinationDataset data(space, {});
    std::size_t line_no = 1;
    std::vector<double> probs(static_cast<std::size_t>(k));
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != k + 2)
            throw Error("InconsistentK", "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(k + 2) + " fields, got " +
                                             std::to_string(fields.size()));
        Example row;
        row.human_label = parse_label(fields[0], line_no, "human_label");
        if (row.human_label < 0 || row.human_label >= k)
            parse_fail(line_no, "human_label out of range");
        if (!fields[1].empty()) {
            const int y = parse_label(fields[1], line_no, "true_label");
            if (y < 0 || y >= k) parse_fail(line_no, "true_label out of range");
            row.true_label = y;
        }
        for (int j = 0; j < k; ++j)
            probs[static_cast<std::size_t>(j)] = parse_prob(fields[static_cast<std::size_t>(j) + 2], line_no);
        try {
            row.model_probs = ProbVector::validated(probs, k);
        } catch (const Error& e) {
            parse_fail(line_no, e.what());
        }
        data.push_row(std::move(row));
    }
    return data;
}

CombinationDataset load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    int k = -1;
    CombinationDataset data;
    std::vector<Example> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            parse_fail(line_no, e.what());
        }
        if (!obj.contains("h") || !obj.contains("m")) parse_fail(line_no, "missing key h or m");
        std::vector<double> probs;
        try {
            probs = obj.at("m").get<std::vector<double>>();
        } catch (const std::exception& e) {
            parse_fail(line_no, e.what());
        }
        if (k < 0) k = static_cast<int>(probs.size());
        if (static_cast<int>(probs.size()) != k)
            throw Error("InconsistentK", "line " + std::to_string(line_no));

        Example row;
        row.human_label = obj.at("h").get<int>();
        if (row.human_label < 0 || row.human_label >= k)
            parse_fail(line_no, "human label out of range");
        if (obj.contains("y") && !obj.at("y").is_null()) {
            const int y = obj.at("y").get<int>();
            if (y < 0 || y >= k) parse_fail(line_no, "true label out of range");
            row.true_label = y;
        }
        try {
            row.model_probs = ProbVector::validated(probs, k);
        } catch (const Error& e) {
            parse_fail(line_no, e.what());
        }
        rows.push_back(std::move(row));
    }
    if (k < 0) throw Error("ParseError", "line 1: empty file");
    return CombinationDataset(LabelSpace(k), std::move(rows));
}

} // namespace

FileFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return (ext == ".jsonl" || ext == ".json") ? FileFormat::Jsonl : FileFormat::Csv;
}

CombinationDataset load_dataset(const std::filesystem::path& path, FileFormat format) {
    return format == FileFormat::Csv ? load_csv(path) : load_jsonl(path);
}

CombinationDataset load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_path(path));
}

void save_dataset(const CombinationDataset& data, const std::filesystem::path& path,
                  FileFormat format) {
    std::ofstream out(path);
    if (!out) throw Error("IoError", "cannot write " + path.string());
    char buf[64];
    if (format == FileFormat::Csv) {
        out << "human_label,true_label";
        for (int j = 0; j < data.k(); ++j) out << ",p_" << j;
        out << "\n";
        for (const Example& row : data.rows()) {
            out << row.human_label << ',';
            if (row.true_label) out << *row.true_label;
            for (int j = 0; j < data.k(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", row.model_probs[static_cast<std::size_t>(j)]);
                out << ',' << buf;
            }
            out << "\n";
        }
    } else {
        for (const Example& row : data.rows()) {
            nlohmann::ordered_json obj;
            obj["h"] = row.human_label;
            if (row.true_label) obj["y"] = *row.true_label;
            else obj["y"] = nullptr;
            obj["m"] = row.model_probs.probs();
            out << obj.dump() << "\n";
        }
    }
}

void save_dataset(const CombinationDataset& data, const std::filesystem::path& path) {
    save_dataset(data, path, format_from_path(path));
}

std::pair<CombinationDataset, CombinationDataset>
split_dataset(const CombinationDataset& data, double eval_fraction, std::uint64_t seed) {
    const std::size_t n = data.size();
    if (n == 0) throw Error("EmptySplit", "dataset is empty");
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
        throw Error("EmptySplit", "eval_fraction must be in (0,1)");
    const std::size_t n_eval =
        static_cast<std::size_t>(std::llround(eval_fraction * static_cast<double>(n)));
    if (n_eval == 0 || n_eval == n)
        throw Error("EmptySplit", "split of n=" + std::to_string(n) + " at fraction " +
                                      std::to_string(eval_fraction) + " leaves an empty side");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = sub_rng(seed, 0x73706c6974ULL); // "split"
    std::shuffle(order.begin(), order.end(), rng);

    const std::span<const std::size_t> all(order);
    return {subset(data, all.subspan(n_eval)), subset(data, all.first(n_eval))};
}

CombinationDataset subset(const CombinationDataset& data, std::span<const std::size_t> indices) {
    std::vector<Example> rows;
    rows.reserve(indices.size());
    for (std::size_t i : indices) rows.push_back(data.rows()[i]);
    return CombinationDataset(data.space(), std::move(rows));
}

} // namespace confide
