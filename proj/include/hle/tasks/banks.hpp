#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "hle/core/types.hpp"

namespace hle {

struct Turn {
    std::string speaker;  // "user" or "bot"
    std::string text;
    bool filtered = false;

    bool operator==(const Turn&) const = default;
};

inline void to_json(Json& j, const Turn& t) {
    j = Json{{"speaker", t.speaker}, {"text", t.text}};
    if (t.filtered) j["filtered"] = true;
}
inline void from_json(const Json& j, Turn& t) {
    j.at("speaker").get_to(t.speaker);
    j.at("text").get_to(t.text);
    t.filtered = j.value("filtered", false);
}

struct Scenario {
    std::string id;
    std::string text;
    std::string dataset;  // "empathetic" or "commonsense"
};

inline void from_json(const Json& j, Scenario& s) {
    j.at("id").get_to(s.id);
    j.at("text").get_to(s.text);
    j.at("dataset").get_to(s.dataset);
}

struct QuizQuestion {
    std::string id;
    std::string text;
    std::vector<std::string> choices;
    int gold = 0;
    std::string subject;
    bool attention_check = false;
};

inline void from_json(const Json& j, QuizQuestion& q) {
    j.at("id").get_to(q.id);
    j.at("text").get_to(q.text);
    j.at("choices").get_to(q.choices);
    j.at("gold").get_to(q.gold);
    q.subject = j.value("subject", std::string{});
    q.attention_check = j.value("attention_check", false);
    if (q.choices.size() != 4) throw Error(ErrorCode::invalid_argument, "question " + q.id + " needs 4 choices");
    if (q.gold < 0 || q.gold > 3) throw Error(ErrorCode::invalid_argument, "question " + q.id + " gold out of range");
}

inline void to_json(Json& j, const QuizQuestion& q) {
    j = Json{{"id", q.id},           {"text", q.text},       {"choices", q.choices},
             {"gold", q.gold},       {"subject", q.subject}, {"attention_check", q.attention_check}};
}

enum class Direction { across, down };
NLOHMANN_JSON_SERIALIZE_ENUM(Direction, {{Direction::across, "across"}, {Direction::down, "down"}})

/// Clue categories used to label crossword clues.
inline const std::vector<std::string>& clue_categories() {
    static const std::vector<std::string> cats = {"knowledge", "definition",  "commonsense",
                                                  "phrase",    "wordplay",    "cross_reference"};
    return cats;
}

struct Clue {
    std::string id;
    Direction direction = Direction::across;
    int row = 0;
    int col = 0;
    std::string text;
    std::string answer;
    std::string category;
};

inline void from_json(const Json& j, Clue& c) {
    j.at("id").get_to(c.id);
    j.at("direction").get_to(c.direction);
    j.at("row").get_to(c.row);
    j.at("col").get_to(c.col);
    j.at("text").get_to(c.text);
    j.at("answer").get_to(c.answer);
    c.category = j.value("category", std::string{});
    const auto& cats = clue_categories();
    if (!c.category.empty() && std::find(cats.begin(), cats.end(), c.category) == cats.end()) {
        throw Error(ErrorCode::invalid_argument, "clue " + c.id + " has unknown category " + c.category);
    }
}

struct Puzzle {
    std::string id;
    std::vector<std::string> mask;  // '#' black, '.' letter slot
    std::vector<Clue> clues;
};

inline void from_json(const Json& j, Puzzle& p) {
    j.at("id").get_to(p.id);
    j.at("mask").get_to(p.mask);
    j.at("clues").get_to(p.clues);
}

struct Document {
    std::string id;
    std::string text;
};

inline void from_json(const Json& j, Document& d) {
    j.at("id").get_to(d.id);
    j.at("text").get_to(d.text);
}

/// Task content loaded from data files.
struct TaskBanks {
    std::vector<Scenario> scenarios;
    std::vector<std::vector<Turn>> dialogue_examples;
    std::vector<QuizQuestion> questions;  // pool plus attention checks
    std::vector<Puzzle> puzzles;
    std::vector<Document> documents;
    std::vector<std::string> metaphor_seeds;
};

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::invalid_argument, path + ": " + e.what());
    }
}

/// Loads every bank file from a directory laid out as data/banks/.
inline TaskBanks load_banks(const std::string& dir) {
    TaskBanks b;
    b.scenarios = read_json_file(dir + "/scenarios.json").at("scenarios").get<std::vector<Scenario>>();
    const Json examples = read_json_file(dir + "/dialogue_examples.json");
    for (const auto& ex : examples.at("examples")) {
        b.dialogue_examples.push_back(ex.at("turns").get<std::vector<Turn>>());
    }
    b.questions = read_json_file(dir + "/quiz.json").at("questions").get<std::vector<QuizQuestion>>();
    b.puzzles = read_json_file(dir + "/puzzles.json").at("puzzles").get<std::vector<Puzzle>>();
    b.documents = read_json_file(dir + "/documents.json").at("documents").get<std::vector<Document>>();
    b.metaphor_seeds = read_json_file(dir + "/metaphors.json").at("seeds").get<std::vector<std::string>>();
    return b;
}

/// Seeded, platform-independent Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::uint64_t state = seed;
    for (std::size_t i = n; i > 1; --i) {
        state = splitmix64(state);
        std::swap(idx[i - 1], idx[state % i]);
    }
    return idx;
}

}  // namespace hle
