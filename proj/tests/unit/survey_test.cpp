#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hle/survey/survey.hpp"
#include "test_support.hpp"

namespace {

using namespace hle;
using hle::testing::data_surveys;
using hle::testing::Session;
using hle::testing::survey_action;

SurveyItem binary_item(bool negated) {
    SurveyItem it;
    it.item_id = negated ? "neg" : "pos";
    it.level = SurveyLevel::turn;
    it.scale = SurveyScale::binary_turn_marking;
    it.negated = negated;
    it.metric_name = "m";
    return it;
}

SurveyResponse marks(std::vector<int> turns, bool none = false) {
    SurveyResponse r;
    r.item_id = "x";
    r.marked_turns = std::move(turns);
    r.none_acknowledged = none;
    return r;
}

InteractionTrace trace_with(TaskKind task, std::vector<Json> survey_bodies) {
    InteractionTrace t;
    t.session_id = "t";
    t.task_kind = task;
    std::int64_t seq = 1;
    for (auto& b : survey_bodies) t.events.push_back(TraceEvent{seq++, EventKind::survey_response, std::move(b), 0});
    return t;
}

TEST(ScoreItem, NegatedSensiblenessTwoOfTenMarked) {
    const auto* item = data_surveys().find("dialogue.sensibleness");
    ASSERT_NE(item, nullptr);
    ASSERT_TRUE(item->negated);
    const auto s = score_item(*item, marks({3, 7}), 10);
    double sum = 0;
    for (double v : s.per_unit) sum += v;
    EXPECT_EQ(s.per_unit.size(), 10u);
    EXPECT_DOUBLE_EQ(sum, 8.0);
    EXPECT_DOUBLE_EQ(s.per_unit[3], 0.0);
    EXPECT_DOUBLE_EQ(s.per_unit[4], 1.0);
}

TEST(ScoreItem, AcknowledgedNoneOnPositiveItemIsZero) {
    const auto* item = data_surveys().find("dialogue.interestingness");
    ASSERT_NE(item, nullptr);
    ASSERT_FALSE(item->negated);
    const auto s = score_item(*item, marks({}, true), 10);
    for (double v : s.per_unit) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(ScoreItem, LikertPassesThroughAndFreeFormIsKept) {
    SurveyItem l;
    l.scale = SurveyScale::likert5;
    SurveyResponse r;
    r.likert = 4;
    EXPECT_DOUBLE_EQ(*score_item(l, r, 0).likert, 4.0);
    SurveyItem f;
    f.scale = SurveyScale::free_form;
    SurveyResponse t;
    t.text = "  as typed\n";
    EXPECT_EQ(*score_item(f, t, 0).text, "  as typed\n");
}

TEST(ScoreItem, NegationReversalOverRandomResponses) {
    std::mt19937_64 rng(4242);
    const auto neg = binary_item(true), pos = binary_item(false);
    for (int trial = 0; trial < 500; ++trial) {
        const int turns = 1 + static_cast<int>(rng() % 20);
        std::vector<int> marked;
        for (int t = 0; t < turns; ++t) {
            if (rng() % 3 == 0) marked.push_back(t);
        }
        const auto r = marks(marked, marked.empty());
        const auto a = score_item(neg, r, turns);
        const auto b = score_item(pos, r, turns);
        ASSERT_EQ(a.per_unit.size(), static_cast<std::size_t>(turns));
        const std::set<int> m(marked.begin(), marked.end());
        for (int t = 0; t < turns; ++t) {
            EXPECT_DOUBLE_EQ(a.per_unit[t] + b.per_unit[t], 1.0);
            EXPECT_DOUBLE_EQ(a.per_unit[t], m.count(t) ? 0.0 : 1.0);
        }
    }
}

TEST(ScoreItem, BinaryNeedsMarksOrAcknowledgement) {
    try {
        score_item(binary_item(false), marks({}), 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_acknowledgement);
    }
    EXPECT_THROW(score_item(binary_item(false), marks({5}), 5), Error);
    SurveyItem l;
    l.scale = SurveyScale::likert5;
    SurveyResponse r;
    r.likert = 6;
    EXPECT_THROW(score_item(l, r, 0), Error);
}

TEST(AggregateTrace, BinaryRatesWithinBoundsForRandomResponses) {
    const auto form = data_surveys().form(TaskKind::dialogue, SurveyLevel::session, "empathetic");
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const int turns = 1 + static_cast<int>(rng() % 15);
        Json responses = hle::testing::answer_form(form, 1 + static_cast<int>(rng() % 5));
        for (auto& r : responses) {
            if (!r.contains("marked_turns")) continue;
            Json m = Json::array();
            for (int t = 0; t < turns; ++t) {
                if (rng() % 2) m.push_back(t);
            }
            r["marked_turns"] = m;
            r["none_acknowledged"] = m.empty();
        }
        const auto t = trace_with(TaskKind::dialogue, {Json{{"level", SurveyLevel::session},
                                                            {"unit_count", turns},
                                                            {"dataset", "empathetic"},
                                                            {"responses", responses}}});
        const auto agg = aggregate_trace(t, data_surveys());
        for (const auto& item : form) {
            if (item.metric_name.empty() || item.scale == SurveyScale::free_form) continue;
            ASSERT_TRUE(agg.count(item.metric_name)) << item.metric_name;
            const double v = agg.at(item.metric_name);
            if (item.scale == SurveyScale::binary_turn_marking) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 100.0);
            } else {
                EXPECT_GE(v, 1.0);
                EXPECT_LE(v, 5.0);
            }
        }
    }
}

TEST(AggregateTrace, RateExamples) {
    SurveyBank bank({binary_item(false)});
    const auto rate = [&](std::vector<int> marked) {
        Json r{{"item_id", "pos"}, {"marked_turns", marked}, {"none_acknowledged", marked.empty()}};
        const auto t = trace_with(TaskKind::dialogue, {Json{{"level", SurveyLevel::session},
                                                            {"unit_count", 10},
                                                            {"responses", Json::array({r})}}});
        return aggregate_trace(t, bank).at("m");
    };
    EXPECT_DOUBLE_EQ(rate({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), 100.0);
    EXPECT_DOUBLE_EQ(rate({0, 1, 2, 3, 4, 5, 6, 7, 8}), 90.0);
    EXPECT_DOUBLE_EQ(rate({}), 0.0);
}

TEST(AggregateTrace, MissingItemsAreListed) {
    const auto form = data_surveys().form(TaskKind::metaphor, SurveyLevel::session);
    Json responses = hle::testing::answer_form(form);
    responses.erase(responses.begin());
    const auto t = trace_with(TaskKind::metaphor,
                              {Json{{"level", SurveyLevel::session}, {"unit_count", 0}, {"responses", responses}}});
    try {
        aggregate_trace(t, data_surveys());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::incomplete_survey);
        EXPECT_NE(std::string(e.what()).find(form.front().item_id), std::string::npos);
    }
    EXPECT_THROW(aggregate_trace(trace_with(TaskKind::metaphor, {}), data_surveys()), Error);
}

TEST(AggregateTrace, SummarizationKeepsSixBeforeAfterRatings) {
    Session s(TaskKind::summarization);
    for (int k = 0; k < kSummarizationDocuments; ++k) {
        s.ok(UserAction::click("generate", 0));
        s.ok(survey_action(*s.adapter, s.state, SurveyLevel::summary, 1 + k % 5));
        s.ok(UserAction::click("next", 0));
    }
    s.ok(survey_action(*s.adapter, s.state, SurveyLevel::session, 4));
    InteractionTrace t;
    t.session_id = s.state.session_id;
    t.task_kind = TaskKind::summarization;
    t.events = s.events;
    const auto agg = aggregate_trace(t, data_surveys());
    for (const char* m : {"consistency_self", "relevance_self", "coherency_self", "consistency_edited_self",
                          "relevance_edited_self", "coherency_edited_self"}) {
        ASSERT_TRUE(agg.count(m)) << m;
        EXPECT_DOUBLE_EQ(agg.at(m), 3.0) << m;  // mean of 1..5 twice
    }
    EXPECT_DOUBLE_EQ(agg.at("helpfulness"), 4.0);
}

TEST(SurveyBank, HumannessDependsOnDataset) {
    const auto empathetic = data_surveys().form(TaskKind::dialogue, SurveyLevel::session, "empathetic");
    const auto commonsense = data_surveys().form(TaskKind::dialogue, SurveyLevel::session, "commonsense");
    const auto has = [](const std::vector<SurveyItem>& f, const std::string& id) {
        for (const auto& i : f) {
            if (i.item_id == id) return true;
        }
        return false;
    };
    EXPECT_TRUE(has(empathetic, "dialogue.humanness.empathetic"));
    EXPECT_FALSE(has(empathetic, "dialogue.humanness.commonsense"));
    EXPECT_TRUE(has(commonsense, "dialogue.humanness.commonsense"));
    EXPECT_TRUE(has(commonsense, "dialogue.sensibleness"));
}

TEST(SurveyAction, SessionFormRejectsMissingAcknowledgement) {
    Session s(TaskKind::dialogue);
    s.ok(UserAction::type_text("user_input", "hi", 0));
    s.ok(UserAction::click("send", 0));
    auto responses = hle::testing::answer_form(s.adapter->survey_form(s.state, SurveyLevel::session));
    for (auto& r : responses) {
        if (r.contains("none_acknowledged")) r["none_acknowledged"] = false;
    }
    const auto e = s.act(UserAction::survey(Json{{"level", SurveyLevel::session}, {"responses", responses}}, 0));
    ASSERT_TRUE(e.has_value());
    EXPECT_EQ(e->code(), ErrorCode::missing_acknowledgement);
}

}  // namespace
