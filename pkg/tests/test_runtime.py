"""Agent runtime tests: templates, completion, protocol parsing."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subtrans.backends.mocks import ScriptedChat
from subtrans.errors import MissingSlot, MockScriptMiss, ResponseEmpty
from subtrans.runtime import (
    COMMENT,
    EDITOR_TEMPLATE,
    PASS,
    PROOFREADER_TEMPLATE,
    TEMPLATES,
    TRANSLATOR_TEMPLATE,
    UNCLEAR,
    VISION_TEMPLATE,
    AgentRuntime,
    ChatMessage,
    ChatParams,
    PromptTemplate,
    Suggestion,
    complete,
    get_template,
    parse_proofreader_output,
    render_prompt,
)


class TestTemplates:
    def test_registry_contains_all_four(self):
        assert set(TEMPLATES) == {"translator", "proofreader", "editor", "vision_analysis"}

    def test_translator_render(self):
        text = render_prompt(
            TRANSLATOR_TEMPLATE,
            {
                "domain": "starcraft2",
                "source_language": "EN",
                "target_language": "ZH",
                "text": "we are building a spire",
                "translation_history": "0: hi => 你好",
            },
        )
        assert "domain of starcraft2" in text
        assert "we are building a spire" in text
        assert "0: hi => 你好" in text
        # unfilled optional slots fall back to defaults
        assert "No supporting documents available." in text
        assert "{" not in text.replace("{your comment here}", "")

    def test_required_slot_missing(self):
        with pytest.raises(MissingSlot) as info:
            render_prompt(TRANSLATOR_TEMPLATE, {"domain": "d", "text": "t"})
        assert info.value.slot in ("source_language", "target_language")

    def test_editor_defaults(self):
        text = render_prompt(
            EDITOR_TEMPLATE,
            {
                "segment_index": 3,
                "source": "hello",
                "translation": "你好",
                "domain": "general",
                "target_language": "zh",
            },
        )
        assert "No suggestion provided." in text
        assert "No user instruction provided." in text
        assert "Directly return the revised content only." in text

    def test_editor_explicit_values_override_defaults(self):
        text = render_prompt(
            EDITOR_TEMPLATE,
            {
                "segment_index": 3,
                "source": "hello",
                "translation": "你好",
                "domain": "general",
                "target_language": "zh",
                "suggestion": "fix the term",
                "user_instruction": "use formal register",
            },
        )
        assert "fix the term" in text
        assert "use formal register" in text
        assert "No suggestion provided." not in text

    def test_none_and_blank_fall_back_to_default(self):
        text = render_prompt(
            EDITOR_TEMPLATE,
            {
                "segment_index": 1,
                "source": "a",
                "translation": "b",
                "domain": "d",
                "target_language": "zh",
                "suggestion": None,
                "user_instruction": "   ",
            },
        )
        assert "No suggestion provided." in text
        assert "No user instruction provided." in text

    def test_proofreader_protocol_markers(self):
        text = render_prompt(
            PROOFREADER_TEMPLATE,
            {"segment_count": 2, "segments": "Segment 0: ...", "domain": "d"},
        )
        assert "DO NOT return JSON" in text
        assert "Segment 0: [your comment here]" in text
        assert 'return "PASS"' in text
        assert 'return "UNCLEAR"' in text

    def test_braces_in_slot_values_stay_inert(self):
        t = PromptTemplate(template_id="t", body="value: {x}", required=frozenset({"x"}))
        assert render_prompt(t, {"x": "{domain} literal"}) == "value: {domain} literal"

    def test_unknown_placeholder_in_body(self):
        t = PromptTemplate(template_id="t", body="has {mystery}")
        with pytest.raises(MissingSlot):
            render_prompt(t, {})

    def test_vision_template_defaults(self):
        text = render_prompt(VISION_TEMPLATE, {})
        assert "No prior visual context." in text

    def test_get_template_unknown(self):
        from subtrans.errors import ConfigError

        with pytest.raises(ConfigError):
            get_template("nope")


class TestComplete:
    def test_returns_stripped_text(self):
        chat = ScriptedChat({"default": "  answer  \n"})
        got = complete(chat, [ChatMessage("user", "q")], ChatParams())
        assert got == "answer"

    def test_blank_raises(self):
        chat = ScriptedChat({"default": "   "})
        with pytest.raises(ResponseEmpty):
            complete(chat, [ChatMessage("user", "q")], ChatParams())

    def test_debug_log_jsonl(self, tmp_path):
        log = tmp_path / "chat.jsonl"
        chat = ScriptedChat({"default": "ok"})
        complete(chat, [ChatMessage("user", "q1")], ChatParams(debug_log=log))
        complete(chat, [ChatMessage("user", "q2")], ChatParams(debug_log=log))
        records = [json.loads(line) for line in log.read_text().splitlines()]
        assert len(records) == 2
        assert records[0]["messages"][0]["content"] == "q1"
        assert records[1]["response"] == "ok"

    def test_message_validation(self):
        with pytest.raises(ValueError):
            ChatMessage("narrator", "hm")
        with pytest.raises(ValueError):
            ChatMessage("user", "")


class TestScriptedChatMock:
    def test_rules_beat_sequence(self):
        chat = ScriptedChat(
            {"rules": [{"contains": ["magic"], "response": "rule"}], "sequence": ["seq"]}
        )
        assert chat.complete([ChatMessage("user", "some magic here")], "m", 0.0, 10) == "rule"
        assert chat.complete([ChatMessage("user", "plain")], "m", 0.0, 10) == "seq"

    def test_miss_raises(self):
        chat = ScriptedChat({"rules": [{"contains": ["x"], "response": "r"}]})
        with pytest.raises(MockScriptMiss):
            chat.complete([ChatMessage("user", "nothing relevant")], "m", 0.0, 10)


class TestParseProofreader:
    def test_colon_form(self):
        got = parse_proofreader_output("Segment 0: PASS\nSegment 1: fix the term", 2)
        assert [s.kind for s in got] == [PASS, COMMENT]
        assert got[0].text == ""
        assert got[1].text == "fix the term"

    def test_bracket_form(self):
        got = parse_proofreader_output("[Segment 0] PASS\n[Segment 1] needs work", 2)
        assert [s.kind for s in got] == [PASS, COMMENT]
        assert got[1].text == "needs work"

    def test_base_index(self):
        got = parse_proofreader_output("[Segment 130] PASS\n[Segment 131] hm", 2, base_index=130)
        assert [s.index for s in got] == [130, 131]
        assert [s.kind for s in got] == [PASS, COMMENT]

    def test_continuation_lines_join(self):
        text = "Segment 0: first part,\n    second part.\nSegment 1: PASS"
        got = parse_proofreader_output(text, 2)
        assert got[0].text == "first part, second part."
        assert got[1].kind == PASS

    def test_unclear_detection(self):
        got = parse_proofreader_output("Segment 0: UNCLEAR - the source seems wrong", 1)
        assert got[0].kind == UNCLEAR
        assert got[0].text == "UNCLEAR - the source seems wrong"

    def test_unclear_must_lead(self):
        got = parse_proofreader_output("Segment 0: the word is unclear to me", 1)
        assert got[0].kind == COMMENT

    def test_pass_variants(self):
        for verdict in ("PASS", "pass", "Pass.", "PASS!"):
            got = parse_proofreader_output(f"Segment 0: {verdict}", 1)
            assert got[0].kind == PASS, verdict
            assert got[0].text == ""

    def test_missing_segment_defaults_to_pass(self):
        got = parse_proofreader_output("Segment 1: only this one", 3)
        assert [s.kind for s in got] == [PASS, COMMENT, PASS]

    def test_out_of_range_dropped(self):
        got = parse_proofreader_output("Segment 7: way off\nSegment 0: ok comment", 2)
        assert [s.kind for s in got] == [COMMENT, PASS]

    def test_duplicate_last_wins(self):
        got = parse_proofreader_output("Segment 0: first\nSegment 0: second", 1)
        assert got[0].text == "second"

    def test_empty_verdict_is_pass(self):
        got = parse_proofreader_output("Segment 0:", 1)
        assert got[0].kind == PASS

    def test_prose_reply_fails_open(self):
        got = parse_proofreader_output("I think everything looks fine overall!", 3)
        assert [s.kind for s in got] == [PASS, PASS, PASS]

    def test_empty_reply_fails_open(self):
        got = parse_proofreader_output("", 2)
        assert [s.kind for s in got] == [PASS, PASS]

    def test_case_insensitive_marker(self):
        got = parse_proofreader_output("SEGMENT 0: hm\nsegment 1: PASS", 2)
        assert [s.kind for s in got] == [COMMENT, PASS]

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=400), st.integers(min_value=0, max_value=8))
    def test_total_on_arbitrary_text(self, text, n):
        got = parse_proofreader_output(text, n)
        assert len(got) == n
        assert [s.index for s in got] == list(range(n))
        assert all(s.kind in (PASS, UNCLEAR, COMMENT) for s in got)

    def test_suggestion_validation(self):
        with pytest.raises(ValueError):
            Suggestion(index=-1, kind=PASS)
        with pytest.raises(ValueError):
            Suggestion(index=0, kind="MAYBE")


class TestAgentRuntime:
    def test_counters_by_role(self):
        rt = AgentRuntime(chat_backend=ScriptedChat({"default": "ok"}))
        rt.chat("translator", [ChatMessage("user", "a")])
        rt.chat("translator", [ChatMessage("user", "b")])
        rt.chat("editor", [ChatMessage("user", "c")])
        assert rt.counters == {"chat.translator": 2, "chat.editor": 1}

    def test_warnings_captured_from_parsing(self):
        rt = AgentRuntime(chat_backend=ScriptedChat({"default": "ok"}))
        got = rt.proofread_suggestions("Segment 9: out of range", 2, base_index=0)
        assert [s.kind for s in got] == [PASS, PASS]
        assert any("out-of-range" in w for w in rt.warnings)
        assert any("no verdict" in w for w in rt.warnings)

    def test_render_via_runtime(self):
        rt = AgentRuntime(chat_backend=ScriptedChat({"default": "ok"}))
        text = rt.render(
            "translator",
            domain="d",
            source_language="en",
            target_language="zh",
            text="hello",
        )
        assert "hello" in text
