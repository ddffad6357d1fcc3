"""Bundled evaluation scenario premises, usable as run fixtures by id."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    genre: str
    title: str
    language: str
    source: str  # "existing" | "synthesized"
    premise: str


SCENARIOS: dict[str, Scenario] = {
    s.scenario_id: s
    for s in (
        Scenario(
            scenario_id="mystery_changan",
            genre="Mystery",
            title="The Longest Day in Chang'an",
            language="ZH",
            source="existing",
            premise=(
                "On the Lantern Festival, undercurrents surge in Chang'an as Turkic "
                "\"Wolf Guards\" infiltrate, plotting a devastating fire attack named "
                "\"Quelehuoduo.\" Li Bi, head of the Jing'an Department, recruits "
                "death-row inmate Zhang Xiaojing to save the city. Within twelve hours, "
                "this duo navigates both street chases and court politics. They uncover "
                "that the terror plot intertwines with the Crown Prince's struggle and "
                "official conspiracies aimed at the Tang Dynasty's foundation. "
                "Ultimately, they risk their lives to prevent the Lantern Tower "
                "explosion, resolving the imperial crisis."
            ),
        ),
        Scenario(
            scenario_id="classical_verona",
            genre="Classical Drama",
            title="Romeo and Juliet",
            language="EN",
            source="existing",
            premise=(
                "Amidst the feud between Montagues and Capulets in Verona, two "
                "star-crossed lovers marry in secret. A chain of tragic "
                "misunderstandings and fatal duels forces them toward a heartbreaking "
                "destiny that ultimately unites their warring families in grief."
            ),
        ),
        Scenario(
            scenario_id="epic_westeros",
            genre="Epic Fantasy",
            title="A Song of Ice and Fire",
            language="EN",
            source="existing",
            premise=(
                "Following the Red Wedding, the scattered remnants of House Stark must "
                "forge new identities through trauma. They aim to dismantle the "
                "alliance of terror, reclaim Winterfell, and restore honor in a brutal "
                "saga of vengeance and rebirth."
            ),
        ),
        Scenario(
            scenario_id="eastern_qi_refining",
            genre="Eastern Fantasy",
            title="Ten Thousand Years of Qi Refining",
            language="ZH",
            source="synthesized",
            premise=(
                "Xu Yang, ostensibly a low-level cultivator, is actually a "
                "100,000-year-old entity stronger than gods. When his sect faces "
                "destruction, he emerges to crush enemies with \"accidental\" displays "
                "of overwhelming power. Bound by a \"Source Shackle,\" he must "
                "eventually face upper-realm deities to protect his legacy."
            ),
        ),
        Scenario(
            scenario_id="scifi_lost_will",
            genre="Sci-Fi",
            title="The War of Lost Will (2145)",
            language="EN",
            source="synthesized",
            premise=(
                "Scientist Lin Shen discovers his \"Memory Chip\" tech is corrupted by "
                "a \"Cognitive Pollution Program.\" To prevent humanity from losing "
                "free will, he teams up with a rogue AI \"Zero\" and agent Su Li to "
                "crack the code within 72 hours, battling both external enemies and "
                "his own fading memory."
            ),
        ),
        Scenario(
            scenario_id="modern_dragon_city",
            genre="Modern Drama",
            title="I am the Sky of Dragon City",
            language="ZH",
            source="synthesized",
            premise=(
                "Huo Tian, a humiliated delivery man, awakens a \"Future Vision\" "
                "(3-second foresight). Discovering that a wealthy heir plotted his "
                "mother's illness to steal a family recipe, he uses his ability to win "
                "high-stakes bets and dismantle the heir's family empire in a story of "
                "tactical revenge."
            ),
        ),
    )
}


def get_scenario(scenario_id: str) -> Scenario:
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise KeyError(
            f"unknown scenario {scenario_id!r}; available: {sorted(SCENARIOS)}"
        ) from None
