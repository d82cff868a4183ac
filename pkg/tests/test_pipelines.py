import json
import logging

import pytest

from tkgqa.answers import Answer, FunctionCall
from tkgqa.errors import (
    AnswerParseError,
    ArgumentTypeError,
    ScriptExhaustedError,
    UnknownFunctionError,
)
from tkgqa.generator import GraphParams, generate_graph, generate_instances
from tkgqa.pipelines import (
    OracleMockClient,
    RandomFunctionMockClient,
    ScriptedMockClient,
    TECHNIQUES,
    coerce_answer,
    extract_answer,
    run,
    select_function,
    temporal_confidence,
)
from tkgqa.scoring import score


@pytest.fixture(scope="module")
def instances():
    g = generate_graph(GraphParams(seed=3, n_facts=80))
    return generate_instances(g, per_type=2, seed=5)


def by_type(instances, qtype):
    return next(i for i in instances if i.question_type == qtype)


def fenced(obj) -> str:
    return "```json\n" + json.dumps(obj) + "\n```"


class TestExtractAnswer:
    def test_fenced_block(self):
        explanation, answer = extract_answer(fenced({"explanation": "x", "answer": ["E2", "E3"]}))
        assert explanation == "x"
        assert answer == ["E2", "E3"]

    def test_bare_json_fallback(self):
        explanation, answer = extract_answer('noise {"explanation": "y", "answer": 5} more noise')
        assert explanation == "y" and answer == 5

    def test_no_json_raises(self):
        with pytest.raises(AnswerParseError):
            extract_answer("I cannot answer this.")

    def test_answer_only_object(self):
        explanation, answer = extract_answer(fenced({"answer": "E2"}))
        assert explanation == "" and answer == "E2"


class TestCoerceAnswer:
    def test_entity(self):
        assert coerce_answer("entity", " E2 ") == Answer.entity("E2")

    def test_entity_list(self):
        assert coerce_answer("entity_list", ["E2", "E3"]) == Answer.entity_list(["E2", "E3"])
        assert coerce_answer("entity_list", "E2") == Answer.entity_list(["E2"])

    def test_boolean_synonyms(self):
        assert coerce_answer("boolean", "Yes") == Answer.boolean(True)
        assert coerce_answer("boolean", "no") == Answer.boolean(False)
        assert coerce_answer("boolean", True) == Answer.boolean(True)

    def test_integers(self):
        assert coerce_answer("count", "4") == Answer.count(4)
        assert coerce_answer("duration", 7.0) == Answer.duration(7)
        assert coerce_answer("time_point", 2004) == Answer.time_point(2004)

    def test_interval(self):
        assert coerce_answer("time_interval", [2000, 2005]) == Answer.time_interval((2000, 2005))

    def test_uncoercible(self):
        assert coerce_answer("count", "many") is None
        assert coerce_answer("entity", 12) is None


class TestSelectFunction:
    def test_valid_call(self):
        call = select_function(fenced({"name": "timeline", "arguments": {"s": "E1", "r": "R1", "o": "*"}}))
        assert call == FunctionCall("timeline", {"s": "E1", "r": "R1", "o": "*"})

    def test_unknown_function(self):
        with pytest.raises(UnknownFunctionError):
            select_function(fenced({"name": "foo", "arguments": {}}))

    def test_bad_arguments(self):
        with pytest.raises(ArgumentTypeError):
            select_function(fenced({"name": "timeline", "arguments": [1, 2]}))

    def test_no_json(self):
        with pytest.raises(AnswerParseError):
            select_function("no function here")


class TestScriptedMock:
    def test_ordered_exhaustion(self):
        client = ScriptedMockClient(["a"])
        assert client.complete([{"role": "user", "content": "x"}]) == "a"
        with pytest.raises(ScriptExhaustedError):
            client.complete([{"role": "user", "content": "x"}])

    def test_pattern_mode(self):
        client = ScriptedMockClient({"hello": "hi", "": "fallback"})
        assert client.complete([{"role": "user", "content": "hello there"}]) == "hi"
        assert client.complete([{"role": "user", "content": "other"}]) == "fallback"

    def test_pattern_no_match(self):
        client = ScriptedMockClient({"hello": "hi"})
        with pytest.raises(ScriptExhaustedError):
            client.complete([{"role": "user", "content": "nope"}])

    def test_from_file(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps(["one", "two"]))
        client = ScriptedMockClient.from_file(path)
        assert client.complete([]) == "one"
        assert client.complete([]) == "two"


class TestDirect:
    def test_scripted_entity_answer(self, instances):
        inst = by_type(instances, "before_after")
        reply = fenced({"explanation": "scripted", "answer": inst.gold.value})
        result = run(inst, "direct", ScriptedMockClient([reply]))
        assert result.llm_calls == 1
        assert result.answer == inst.gold
        assert score(result, inst.gold, inst.question_type)

    def test_unparseable_reply_scores_false(self, instances):
        inst = by_type(instances, "timeline")
        result = run(inst, "direct", ScriptedMockClient(["no json at all"]))
        assert result.parse_error
        assert result.raw_answer == "no json at all"
        assert not score(result, inst.gold, inst.question_type)


class TestCot:
    def test_three_calls(self, instances):
        inst = by_type(instances, "timeline")
        reply = fenced({"explanation": "done", "answer": list(inst.gold.value)})
        result = run(inst, "cot", ScriptedMockClient(["analysis", "extraction", reply]))
        assert result.llm_calls == 3
        assert result.answer == inst.gold


class TestCotr:
    def test_reflexion_loop(self, instances):
        inst = by_type(instances, "first_last")
        wrong = fenced({"explanation": "guess", "answer": "E99"})
        right = fenced({"explanation": "fixed", "answer": inst.gold.value})
        script = ["analysis", "extraction", wrong, "repeat_please: the answer looks off", right]
        result = run(inst, "cotr", ScriptedMockClient(script))
        assert result.reflexions == 1
        assert result.llm_calls == 5  # 3 base + 2 reflexion-loop calls
        assert result.answer == inst.gold

    def test_immediate_acceptance(self, instances):
        inst = by_type(instances, "first_last")
        right = fenced({"explanation": "sure", "answer": inst.gold.value})
        result = run(inst, "cotr", ScriptedMockClient(["a", "b", right, right]))
        assert result.reflexions == 0
        assert result.llm_calls == 4
        assert result.answer == inst.gold

    def test_reflexion_bound(self, instances):
        inst = by_type(instances, "first_last")
        right = fenced({"explanation": "orig", "answer": inst.gold.value})
        script = ["a", "b", right] + ["repeat_please"] * 3
        result = run(inst, "cotr", ScriptedMockClient(script))
        assert result.reflexions == 3
        assert result.llm_calls == 6  # bounded: 3 + max_reflexions
        assert result.answer == inst.gold  # falls back to the solve-step answer


class TestTot:
    def test_call_count_within_bound(self, instances):
        inst = by_type(instances, "timeline")
        options = fenced({"Option1": "a", "Option2": "b", "Option3": "c"})
        scores = fenced({"score": 8})
        final = fenced({"answer": list(inst.gold.value)})
        client = ScriptedMockClient(
            {
                'keys "Option1"': options,
                'field "score"': scores,
                "Final reasoning path": final,
                "": "intro",
            }
        )
        result = run(inst, "tot", client)
        # beam 2 / depth 2 / branch 3: 1 + (1 + 3) + (2 + 6) + 1
        assert result.llm_calls == 14
        assert result.answer == inst.gold

    def test_score_parse_failure_defaults(self, instances):
        inst = by_type(instances, "timeline")
        options = fenced({"Option1": "a", "Option2": "b", "Option3": "c"})
        final = fenced({"answer": list(inst.gold.value)})
        client = ScriptedMockClient(
            {
                'keys "Option1"': options,
                'field "score"': "not a score",
                "Final reasoning path": final,
                "": "intro",
            }
        )
        result = run(inst, "tot", client)
        assert result.llm_calls == 14
        assert result.answer == inst.gold


class TestCote:
    def test_program_executed(self, instances):
        inst = by_type(instances, "calculate_total_relation_time")
        args = inst.canonical_call.arguments
        src = f"facts({args.get('s', '*')}, {args.get('r', '*')}, {args.get('o', '*')}) |> merge_total"
        script = ["analysis", "```tqdsl\n" + src + "\n```"]
        result = run(inst, "cote", ScriptedMockClient(script))
        assert result.llm_calls == 2
        assert result.dsl_programs
        assert result.answer == inst.gold

    def test_bad_program_recorded(self, instances):
        inst = by_type(instances, "timeline")
        script = ["analysis", "```tqdsl\nfacts(E1 R1\n```"]
        result = run(inst, "cote", ScriptedMockClient(script))
        assert result.parse_error
        assert any("parse error" in e for e in result.errors)

    def test_structuring_path(self, instances):
        inst = by_type(instances, "calculate_total_relation_time")
        result = run(inst, "cote_s", OracleMockClient(inst))
        assert result.llm_calls == 3
        assert result.answer == inst.gold


class TestCotapi:
    def test_oracle_mock_hits_gold(self, instances):
        for inst in instances:
            result = run(inst, "cotapi", OracleMockClient(inst))
            assert result.llm_calls == 3
            assert result.function_calls and result.function_calls[0][1] is True
            assert score(result, inst.gold, inst.question_type), inst.id

    def test_structuring_adds_one_call(self, instances):
        inst = by_type(instances, "timeline")
        result = run(inst, "cotapi_s", OracleMockClient(inst))
        assert result.llm_calls == 4
        assert score(result, inst.gold, inst.question_type)

    def test_non_associated_function_still_dispatched(self, instances):
        inst = by_type(instances, "timeline")
        args = inst.canonical_call.arguments
        select = fenced({"name": "first_last", "arguments": {**args, "which": "first"}})
        final = fenced({"explanation": "used first_last", "answer": "E1"})
        client = ScriptedMockClient(
            {"Available functions:": select, "Function results:": final, "": "analysis"}
        )
        result = run(inst, "cotapi", client)
        assert result.function_calls[0][1] is False
        assert result.llm_calls == 3

    def test_unknown_function_proceeds_to_failure_answer(self, instances):
        inst = by_type(instances, "timeline")
        select = fenced({"name": "foo", "arguments": {}})
        client = ScriptedMockClient(
            {"Available functions:": select, "Function results:": "no json", "": "analysis"}
        )
        result = run(inst, "cotapi", client)
        assert result.llm_calls == 3
        assert result.function_calls == []
        assert any("selection failed" in e for e in result.errors)
        assert not score(result, inst.gold, inst.question_type)

    def test_random_mock_below_oracle(self, instances):
        oracle_correct = sum(
            score(run(i, "cotapi", OracleMockClient(i)), i.gold, i.question_type) for i in instances
        )
        random_correct = sum(
            score(run(i, "cotapi", RandomFunctionMockClient(i, seed=1)), i.gold, i.question_type)
            for i in instances
        )
        assert oracle_correct == len(instances)
        assert random_correct < oracle_correct


class TestDeterminism:
    @pytest.mark.parametrize("technique", TECHNIQUES)
    def test_identical_transcripts(self, instances, technique):
        inst = by_type(instances, "timeline")
        first = run(inst, technique, OracleMockClient(inst))
        second = run(inst, technique, OracleMockClient(inst))
        assert first.transcript == second.transcript
        assert first.answer == second.answer
        assert first.llm_calls == second.llm_calls
        assert json.dumps(first.transcript_record(), sort_keys=True) == json.dumps(
            second.transcript_record(), sort_keys=True
        )

    def test_graph_never_mutated(self, instances):
        inst = by_type(instances, "timeline")
        facts_before = inst.tkg.facts
        for technique in TECHNIQUES:
            run(inst, technique, OracleMockClient(inst))
        assert inst.tkg.facts is facts_before


class TestTemporalConfidence:
    def test_parsed_score(self):
        client = ScriptedMockClient([fenced({"score": 0.95})])
        assert temporal_confidence("q", "d", client) == 0.95

    def test_clamped_score_warns(self, caplog):
        client = ScriptedMockClient([fenced({"score": 1.7})])
        with caplog.at_level(logging.WARNING):
            value = temporal_confidence("q", "d", client)
        assert value == 1.0
        assert any("clamp" in rec.message for rec in caplog.records)

    def test_missing_score_is_none(self):
        client = ScriptedMockClient(["no score here"])
        assert temporal_confidence("q", "d", client) is None


def test_unknown_technique_rejected(instances):
    with pytest.raises(ValueError):
        run(instances[0], "bogus", ScriptedMockClient([]))
