from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from framechat.context import (
    ContextBuffer,
    DialogueLine,
    Frame,
    NoFramesError,
    PromptView,
    Speaker,
    StaleRunError,
    SummarisationPolicy,
    Summary,
    count_frames,
)

from conftest import agent_line, buffer_with, frame, summary, user_line


def brute_force_select(elements, m: int):
    """Independent scanner: first frame, extend while frames, cap at m."""
    for index, element in enumerate(elements):
        if isinstance(element, Frame):
            run = []
            for candidate in elements[index:]:
                if not isinstance(candidate, Frame) or len(run) >= m:
                    break
                run.append(candidate)
            return index, run
    return None


class TestValidation:
    def test_policy_defaults(self):
        policy = SummarisationPolicy()
        assert (policy.n, policy.m) == (4, 3)

    @pytest.mark.parametrize("n,m", [(2, 2), (3, 4), (2, 5)])
    def test_policy_rejects_m_not_less_than_n(self, n, m):
        with pytest.raises(ValueError, match="m must be < n"):
            SummarisationPolicy(n=n, m=m)

    def test_policy_rejects_nonpositive_m(self):
        with pytest.raises(ValueError, match="m must be >= 1"):
            SummarisationPolicy(n=3, m=0)

    def test_dialogue_rejects_empty_text(self):
        with pytest.raises(ValueError, match="empty"):
            DialogueLine(Speaker.USER, "   \t ", 0)

    def test_dialogue_trims_text(self):
        assert DialogueLine(Speaker.USER, "  hi  ", 0).text == "hi"

    def test_frame_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            frame(1, width=0)

    def test_frame_rejects_unknown_media_type(self):
        with pytest.raises(ValueError):
            frame(1, media_type="image/gif")

    def test_summary_rejects_unordered_ids(self):
        with pytest.raises(ValueError):
            summary(3, 2)

    def test_summary_rejects_empty_coverage(self):
        with pytest.raises(ValueError):
            Summary(text="x", covers_frame_ids=(), created_at=0)


class TestAppendDialogue:
    def test_appends_after_frame(self):
        buf = buffer_with(frame(1))
        line = user_line("hi")
        buf.append_dialogue(line)
        assert buf.elements == [frame(1), line]

    def test_append_after_summarised_state(self):
        # After the first summarisation, a user line and the reply are appended.
        buf = buffer_with(summary(1, 2), frame(3), n=3, m=2)
        buf.append_dialogue(user_line("what do you see?"))
        buf.append_dialogue(agent_line("a desk"))
        kinds = [type(e) for e in buf.elements]
        assert kinds == [Summary, Frame, DialogueLine, DialogueLine]

    def test_dialogue_only_never_triggers(self):
        buf = ContextBuffer(policy=SummarisationPolicy(n=2, m=1))
        for i in range(50):
            buf.append_dialogue(user_line(f"line {i}", at=i))
        assert len(buf.elements) == 50
        assert buf.frame_count == 0


class TestAppendFrame:
    def test_trigger_at_n_selects_first_m(self):
        buf = buffer_with(frame(1), frame(2), n=3, m=2)
        run = buf.append_frame(frame(3))
        assert [e.frame_id for e in buf.elements] == [1, 2, 3]
        assert run is not None
        assert run.start_index == 0
        assert run.frame_ids == (1, 2)

    def test_below_n_no_trigger(self):
        buf = ContextBuffer(policy=SummarisationPolicy(n=3, m=2))
        assert buf.append_frame(frame(1)) is None
        assert [e.frame_id for e in buf.elements] == [1]

    def test_run_cut_by_dialogue(self):
        # Only frame 3 is summarised: the dialogue line cuts the run.
        buf = buffer_with(
            summary(1, 2), frame(3), user_line(), agent_line(), frame(4), n=3, m=2
        )
        run = buf.append_frame(frame(5))
        assert run is not None
        assert run.frame_ids == (3,)
        assert run.start_index == 1

    def test_rejects_non_monotonic_id(self):
        buf = buffer_with(frame(5))
        with pytest.raises(ValueError, match="not greater"):
            buf.append_frame(frame(5))
        with pytest.raises(ValueError, match="not greater"):
            buf.append_frame(frame(4))

    def test_monotonicity_survives_summarisation(self):
        # Covered ids may no longer appear in the buffer but stay reserved.
        buf = buffer_with(summary(1, 2, 3), n=4, m=3)
        with pytest.raises(ValueError, match="not greater"):
            buf.append_frame(frame(2))

    def test_hard_overflow_drops_oldest(self, caplog):
        buf = ContextBuffer(policy=SummarisationPolicy(n=2, m=1))
        with caplog.at_level("WARNING"):
            for i in range(1, 6):
                buf.append_frame(frame(i))  # triggers never resolved (outage)
        assert buf.frame_count == 4  # capped at 2n
        assert [e.frame_id for e in buf.elements] == [2, 3, 4, 5]
        assert any("overflow" in record.message for record in caplog.records)


class TestSelectRun:
    def test_truncates_to_m(self):
        buf = buffer_with(frame(1), frame(2), frame(3), n=4, m=2)
        run = buf.select_run()
        assert run.start_index == 0
        assert run.frame_ids == (1, 2)

    def test_single_frame_run_cut_by_dialogue(self):
        buf = buffer_with(summary(1, 2), frame(3), user_line(), frame(4), frame(5), n=4, m=3)
        run = buf.select_run()
        assert run.start_index == 1
        assert run.frame_ids == (3,)

    def test_run_starts_after_leading_dialogue(self):
        buf = buffer_with(
            user_line("a"), frame(1), frame(2), user_line("b"), frame(3), n=4, m=3
        )
        run = buf.select_run()
        assert run.start_index == 1
        assert run.frame_ids == (1, 2)
        expected = brute_force_select(buf.elements, buf.policy.m)
        assert expected is not None
        assert run.start_index == expected[0]
        assert run.frame_ids == tuple(f.frame_id for f in expected[1])

    def test_errors_without_frames(self):
        buf = buffer_with(user_line(), summary(1))
        with pytest.raises(NoFramesError):
            buf.select_run()


class TestReplaceRun:
    def test_replace_first_two_of_three(self):
        buf = buffer_with(frame(1), frame(2), frame(3), n=3, m=2)
        run = buf.select_run()
        buf.replace_run_with_summary(run, summary(1, 2))
        assert [type(e) for e in buf.elements] == [Summary, Frame]
        assert buf.elements[0].covers_frame_ids == (1, 2)
        assert buf.elements[1].frame_id == 3

    def test_adjacent_summaries_not_merged(self):
        buf = buffer_with(
            summary(1, 2), frame(3), user_line(), agent_line(), frame(4), frame(5),
            n=3, m=2,
        )
        run = buf.select_run()
        assert run.frame_ids == (3,)
        buf.replace_run_with_summary(run, summary(3))
        kinds = [type(e) for e in buf.elements]
        assert kinds == [Summary, Summary, DialogueLine, DialogueLine, Frame, Frame]
        assert buf.elements[0].covers_frame_ids == (1, 2)
        assert buf.elements[1].covers_frame_ids == (3,)

    def test_single_frame_buffer_goes_to_zero_frames(self):
        buf = buffer_with(frame(7), n=3, m=2)
        run = buf.select_run()
        buf.replace_run_with_summary(run, summary(7))
        assert [type(e) for e in buf.elements] == [Summary]
        assert buf.frame_count == 0

    def test_stale_run_rejected(self):
        buf = buffer_with(frame(1), frame(2), frame(3), n=3, m=2)
        run = buf.select_run()
        buf.replace_run_with_summary(run, summary(1, 2))
        with pytest.raises(StaleRunError):
            buf.replace_run_with_summary(run, summary(1, 2))

    def test_mismatched_coverage_rejected(self):
        buf = buffer_with(frame(1), frame(2), n=3, m=2)
        run = buf.select_run()
        with pytest.raises(ValueError, match="cover"):
            buf.replace_run_with_summary(run, summary(1, 3))

    def test_element_count_shrinks_by_run_length_minus_one(self):
        buf = buffer_with(frame(1), frame(2), frame(3), user_line(), n=4, m=3)
        before = len(buf.elements)
        run = buf.select_run()
        buf.replace_run_with_summary(run, summary(1, 2, 3))
        assert len(buf.elements) == before - (len(run.frames) - 1)


class TestFrameCount:
    def test_empty(self):
        assert ContextBuffer().frame_count == 0

    def test_mixed(self):
        buf = buffer_with(summary(1, 2), frame(3), user_line(), frame(4))
        assert buf.frame_count == 2

    def test_two_summaries_exchange_two_frames(self):
        buf = buffer_with(
            summary(1, 2), summary(3), user_line(), agent_line(), frame(4), frame(5)
        )
        assert buf.frame_count == 2


class TestSnapshot:
    def test_isolated_from_later_mutations(self):
        buf = buffer_with(frame(1), n=3, m=2)
        view = buf.snapshot()
        buf.append_frame(frame(2))
        assert len(view.elements) == 1
        assert len(buf.elements) == 2

    def test_empty_buffer(self):
        view = ContextBuffer().snapshot()
        assert view.elements == ()
        assert view.frame_count == 0

    def test_carries_system_instructions(self):
        buf = ContextBuffer(system_instructions="be terse")
        assert buf.snapshot().system_instructions == "be terse"


# -- property tests -----------------------------------------------------------

policies = st.integers(min_value=2, max_value=8).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(min_value=1, max_value=n - 1))
)


def element_sequences():
    """Random plausible buffers: frames with increasing ids, lines, summaries."""

    def build(kinds: list[str]) -> list:
        elements = []
        next_id = 1
        for i, kind in enumerate(kinds):
            if kind == "frame":
                elements.append(frame(next_id, at=i))
                next_id += 1
            elif kind == "line":
                elements.append(user_line(f"line {i}", at=i))
            else:
                elements.append(summary(next_id, text=f"sum {i}", at=i))
                next_id += 1
        return elements

    return st.lists(
        st.sampled_from(["frame", "line", "summary"]), min_size=0, max_size=30
    ).map(build)


@given(elements=element_sequences(), m=st.integers(min_value=1, max_value=5))
def test_select_run_matches_brute_force_scanner(elements, m):
    buf = buffer_with(*elements, n=m + 1, m=m)
    expected = brute_force_select(elements, m)
    if expected is None:
        with pytest.raises(NoFramesError):
            buf.select_run()
        return
    run = buf.select_run()
    assert run.start_index == expected[0]
    assert run.frame_ids == tuple(f.frame_id for f in expected[1])


@given(elements=element_sequences())
def test_snapshot_equals_elementwise_copy(elements):
    buf = buffer_with(*elements)
    view = buf.snapshot()
    manual = PromptView(
        system_instructions=buf.system_instructions,
        elements=tuple(element for element in buf.elements),
    )
    assert view == manual


@settings(max_examples=200)
@given(
    policy=policies,
    events=st.lists(st.sampled_from(["frame", "line"]), min_size=1, max_size=60),
)
def test_event_stream_invariants_with_immediate_resolution(policy, events):
    """Drive appends, resolving each trigger synchronously with a stub summary."""
    n, m = policy
    buf = ContextBuffer(policy=SummarisationPolicy(n=n, m=m))
    appended_frames: list[int] = []
    appended_lines: list[str] = []
    next_id = 1
    for i, kind in enumerate(events):
        if kind == "frame":
            run = buf.append_frame(frame(next_id, at=i))
            appended_frames.append(next_id)
            next_id += 1
            if run is not None:
                stub = Summary(
                    text=f"stub {i}", covers_frame_ids=run.frame_ids, created_at=i
                )
                buf.replace_run_with_summary(run, stub)
                # Post-resolution: at least n - m >= 1 frames survive.
                assert n - m <= buf.frame_count <= n - 1
        else:
            line = user_line(f"line {i}", at=i)
            buf.append_dialogue(line)
            appended_lines.append(line.text)
        # Quiescent point.
        assert buf.frame_count <= n

    # Dialogue subsequence is never reordered.
    in_buffer = [e.text for e in buf.elements if isinstance(e, DialogueLine)]
    assert in_buffer == appended_lines

    # Summaries partition exactly the summarised ids, all below retained ids.
    covered = [
        i for e in buf.elements if isinstance(e, Summary) for i in e.covers_frame_ids
    ]
    retained = [e.frame_id for e in buf.elements if isinstance(e, Frame)]
    assert sorted(covered + retained) == appended_frames
    if covered and retained:
        assert max(covered) < min(retained)

    # Summaries sit at the former position of their run's first frame: ids
    # read in element order must be globally increasing.
    ordered_ids: list[int] = []
    for element in buf.elements:
        if isinstance(element, Summary):
            ordered_ids.extend(element.covers_frame_ids)
        elif isinstance(element, Frame):
            ordered_ids.append(element.frame_id)
    assert ordered_ids == sorted(ordered_ids)


def test_count_frames_helper():
    assert count_frames([frame(1), user_line(), summary(2)]) == 1
