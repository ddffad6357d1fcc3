"""Prompt templates with named placeholders.

The four memory/blocking/grounding templates (UPDATE_RELATION, UPDATE_PROFILE,
GENERATE_SPATIAL_POSITIONING, FIND_NEW_ROLE_INFO) are frozen external
interfaces: their rendered output is pinned byte-for-byte by golden tests.
Do not edit their bodies without regenerating the golden files.

Template bodies use ``str.format`` syntax: ``{name}`` is a placeholder,
``{{``/``}}`` render as literal braces.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

from ..errors import MissingPlaceholder

_formatter = string.Formatter()


def _placeholders(body: str) -> frozenset[str]:
    return frozenset(
        field for _, field, _, _ in _formatter.parse(body) if field
    )


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str

    @property
    def required(self) -> frozenset[str]:
        return _placeholders(self.body)

    def render(self, bindings: dict[str, object]) -> str:
        missing = sorted(self.required - set(bindings))
        if missing:
            raise MissingPlaceholder(
                f"template {self.id}: unbound placeholders {missing}"
            )
        return self.body.format(**{k: bindings[k] for k in self.required})


UPDATE_RELATION = """\
You need to update your relationships with relevant characters based on the following information.

## Character Description
{role_profile}

## Character Relationships
{relation}

## Character Current Status
{status}

## Conversation History
{history_text}

## Character Relationship Update Requirements
Please strictly follow the requirements below and return the updated relationships in JSON format:
1. Decision Logic: Combine the "Character Current Status" and "Conversation History" to determine whether the relationships need to be updated. Only update if there are significant interactions or changes in the dynamic.
2. Update Strategy: If changes are needed, please modify or supplement the original "detail" field content to reflect the new state. If the existing description is still accurate and sufficient, do not change it.
3. You can only modify the values of the "relation" and "detail" fields in each sub-object.
4. The value of the "relation" field must be a list of strings (List[str]), for example: ["new relationship1", "new relationship2"].
5. The value of the "detail" field must be a string. Keep it concise and summarized (recommended 300-500 words maximum). Focus on core relationship points and recent changes; avoid lengthy historical reviews.
6. Do not change any other keys (e.g., "ZhaoKai-en", "LinWanYue-en", etc.) or the overall JSON structure.
7. Your response cannot contain any extra text or explanations besides the updated JSON.
8. You cannot delete characters, even if there is no relationship.

Important: Ensure the total JSON length does not exceed the model's output limit. Prioritize JSON completeness.\
"""

UPDATE_PROFILE = """\
You need to update the character's "profile" field based on the following information.

## Original Character Description (JSON format)
{role_profile}

## Character Current Status
{status}

## Conversation History
{history_text}

## Character Description Update Requirements
Please strictly follow the requirements below and only return the updated "profile" field's string content:
1. Analyze the "profile" field in the "Original Character Description".
2. Combine the "Character Current Status" and "Conversation History" to determine whether the "profile" field needs to be updated.
3. The "profile" field can only be changed when major changes related to the character occur in the story and have an impact on them.
4. If changes are needed, please modify or add to the original "profile" field content.
5. If no changes are needed, please return the original "profile" field's string content.
6. Your response must be pure text string, and can only contain the content of the "profile" field after updating (or without updating).
7. Do not include any JSON structure
8. Do not include any extra text or explanations (such as "Okay, here's the updated...").

For example, if the original "profile" is "a student", after updating it should become "a student who just finished an exam", you can only return "a student who just finished an exam".\
"""

GENERATE_SPATIAL_POSITIONING = """\
# Role Definition
You are a professional stage director specializing in spatial blocking, skilled at arranging character positions to create dramatic tension and visual composition.

# Core Task
Design reasonable spatial positioning for all participating characters (including NPCs) based on the current scene/event, character relationships, and dialogue history.

# Input Information
## Current Scene/Event: {scene_or_event}
## Participating Characters List: {roles_list}
## Current Location: Location Name: {location_name}; Location Description: {location_description}
## Recent Dialogue History: {recent_history}
## Current Dialogue Round: Round {current_round}

# Spatial Positioning Design Principles
## 1. Relative Position: Describe distances (face-to-face, side-by-side...), power dynamics, emotional relationships.
## 2. Embodied Posture: Standing, Sitting, Other postures.
## 3. Facing Direction: Face-to-face, Back turned, Sideways, Same direction.
## 4. Scene Interaction: Furniture interaction, Environmental interaction, Prop interaction.

# Output Format Requirements
Must output a strict JSON object in the following format:
{{
  "spatial_layout": "One-sentence description of overall spatial composition (20-40 characters)",
  "positions": {{
    "Character A Name": {{
      "position": "Position in space (e.g., by window)",
      "posture": "Body posture (e.g., standing)",
      "facing": "Facing direction (e.g., facing Character B)",
      "relation_to_scene": "Relationship to scene elements"
    }},
    ...
  }}
}}

# Design Considerations
1. Dynamic Adjustment: Fine-tune based on dialogue development.
2. Relationship Hints: Use distance and facing to suggest relationships.
3. Dramatic Tension: Increase/reduce distance based on conflict/reconciliation.
4. Logical Consistency: Matching location characteristics.
5. Include All Characters: Ensure every participating character has clear position description.

---
Now, design the spatial positioning for this round of dialogue based on the above information. Output the JSON object directly without any other explanations or markdown code block markers.\
"""

FIND_NEW_ROLE_INFO = """\
You are a skilled screenwriter. Based on the following information, generate character information for {role_code}.

### Records of Previous Scenes
{history_scene_json}

### Current Event
{event}

### Information of All Other Characters
{role_agents}

### Requirements
1. Based on the records of previous scenes, generate character information.
2. The character information should include character profile, gender, identity, and relation.
3. Return in JSON format, formatted as follows:
{{
    "profile": "character profile",
    "gender": "character gender",
    "identity": "character identity",
    "relation": "character relationships",
    "name": "character name",
    "nickname": "character nickname"
}}
4. Forbidden to output any explanations, comments, or Markdown markers (e.g., ```json, ```python).\
"""

# --- engine-authored templates --------------------------------------------

GENESIS_WORLD = """\
You are the world-builder for an interactive narrative simulation.

## Story Premise
{premise}

## Simulation Language
{language}

## Task
Design the story world as a small set of named locations connected by plausible one-scene transitions, plus foundational lore entries that every character treats as ground truth.

## Output Format Requirements
Return a strict JSON object:
{{
  "locations": [
    {{"code": "snake_case_code", "name": "Display Name", "description": "One or two sentences.", "adjacent": ["other_code"]}}
  ],
  "lore": [
    {{"key": "lore:topic_slug", "body": "An immutable world truth."}}
  ]
}}
Location codes must be ASCII snake_case and unique. Adjacency must reference defined codes only. Output the JSON object directly without any other explanations or markdown code block markers.\
"""

GENESIS_ROSTER = """\
You are casting the main characters for an interactive narrative simulation.

## Story Premise
{premise}

## Simulation Language
{language}

## World Locations
{locations_summary}

## Task
Instantiate the main characters implied by the premise.

## Output Format Requirements
Return a strict JSON object:
{{
  "roles": [
    {{"role_code": "CamelName-{language_suffix}", "name": "Full Name", "nickname": "Epithet", "profile": "Who they are.", "status": "Current situation.", "goals": ["a goal"]}}
  ]
}}
Role codes are CamelCase names with the language suffix. Output the JSON object directly without any other explanations or markdown code block markers.\
"""

GENESIS_SPINE_SNP = """\
You are the narrative planner for an interactive simulation running in sequential milestone mode.

## Story Premise
{premise}

## Main Characters
{roster_summary}

## Task
Lay out the story as an ordered list of key milestone nodes. Characters will be motivated toward each milestone in order but improvise freely between them.

## Output Format Requirements
Return a strict JSON object:
{{
  "nodes": [
    {{"id": "n1", "title": "Milestone title", "objective": "What must happen.", "completion_condition": "Observable condition that marks this milestone reached.", "constraints": []}}
  ]
}}
Node ids must be unique. Output the JSON object directly without any other explanations or markdown code block markers.\
"""

GENESIS_SPINE_HDP = """\
You are the narrative planner for an interactive simulation running in hierarchical planning mode.

## Story Premise
{premise}

## Main Characters
{roster_summary}

## Task
Lay out the story as an ordered event tree: a root arc whose ordered children elaborate it in detail. The simulation will traverse the tree depth-first, parent before children.

## Output Format Requirements
Return a strict JSON object:
{{
  "root": {{"id": "a1", "title": "Arc title", "objective": "What must happen.", "completion_condition": "Observable condition.", "constraints": ["a hard plot constraint"], "children": [
    {{"id": "a1.1", "title": "Beat title", "objective": "...", "completion_condition": "...", "constraints": [], "children": []}}
  ]}}
}}
Node ids must be unique across the tree. Output the JSON object directly without any other explanations or markdown code block markers.\
"""

EVENT_PLAN = """\
You are the stage planner preparing the next event of an interactive narrative simulation.

## Event
{event_id}

## Current Narrative Directive
{directive_text}

## Main Characters
{roster_summary}

## World Locations
{locations_summary}

## Story So Far
{previous_summary}

## Task
Plan {scene_count} scenes for this event. Each scene names one location, the participating characters, and the plot beat it should dramatize. Characters may only move between adjacent locations from one scene to the next.

## Output Format Requirements
Return a strict JSON object:
{{
  "scenes": [
    {{"scene_id": "e1s1", "location": "location_code", "participants": ["RoleCode-en"], "beat": "What this scene dramatizes."}}
  ]
}}
Output the JSON object directly without any other explanations or markdown code block markers.\
"""

ALIGN_REPAIR = """\
You are correcting a scene plan that failed role-location-plot alignment checks.

## Violations
{violations_text}

## Current Scene Plans
{plans_json}

## Task
Repair the plans so that every participant is a known character, locations exist and are reachable one scene at a time, and every character named by a plot beat is a participant of that scene. Keep all repairs minimal.

## Output Format Requirements
Return a strict JSON object with the complete repaired plan list:
{{
  "scenes": [
    {{"scene_id": "e1s1", "location": "location_code", "participants": ["RoleCode-en"], "beat": "..."}}
  ]
}}
Output the JSON object directly without any other explanations or markdown code block markers.\
"""

DIRECTOR_GUIDANCE = """\
You are the director of an interactive narrative simulation, conducting one round of one scene.

## Paradigm
{paradigm}

## Active Directive
{directive_text}

## Scene
{scene_id}, round {round_number}

## Participants
{participants}

## Recent History
{recent_history}

## Task
Choose which participant speaks this round and give them one short piece of interaction guidance. Signal the end of the scene when its beat has played out.

## Output Format Requirements
Return a strict JSON object:
{{"speaker": "RoleCode-en", "guidance": "One or two sentences of direction.", "end_scene": false}}
Output the JSON object directly without any other explanations or markdown code block markers.\
"""

ROLE_TURN = """\
You are playing {role_name} ({role_code}) in an interactive narrative simulation.

## Your Profile
{profile}

## Your Current Status
{status}

## Your Goals
{goals}

## Your Relationships
{relations_json}

## Your Spatial Anchor This Round
{spatial_anchor}

## Director Guidance
{guidance}

## Recent History
{recent_history}

## Task
Produce your turn: one non-verbal action and one utterance, staying consistent with your spatial anchor, profile, and relationships. List any character names you mention who are not already participants.

## Output Format Requirements
Return a strict JSON object:
{{"action": "What you physically do.", "utterance": "What you say.", "mentions": []}}
Output the JSON object directly without any other explanations or markdown code block markers.\
"""

SPARK_VALIDATION = """\
You are the director of an interactive narrative simulation. An uninitialized character name appeared in generated output.

## Name
{raw_name}

## Surrounding Context
{context}

## Active Directive
{directive_text}

## Task
Judge whether promoting this name to a persistent character would serve the current narrative flow. Score its plot-criticality from 0.0 (noise, discard) to 1.0 (essential, promote).

## Output Format Requirements
Return a strict JSON object:
{{"score": 0.0, "reason": "One sentence."}}
Output the JSON object directly without any other explanations or markdown code block markers.\
"""

COMPLETION_CHECK = """\
You are checking whether a narrative milestone has been reached.

## Completion Condition
{condition}

## Transcript Window
{window}

## Task
Answer YES if the transcript window satisfies the completion condition, otherwise answer NO. Reply with the single word YES or NO and nothing else.\
"""

JUDGE_PAIRWISE = """\
You are an impartial judge comparing two interactive narrative transcripts on one quality dimension.

## Dimension
{metric_code}: {metric_rubric}

## Paradigm
{paradigm}

## Transcript One
{transcript_one}

## Transcript Two
{transcript_two}

## Task
Decide which transcript is stronger on this dimension alone, and rate each on a 1-5 scale (5 best). Declare a tie only when they are genuinely indistinguishable.

## Output Format Requirements
Return a strict JSON object:
{{"winner": "first", "likert_first": 3, "likert_second": 3}}
"winner" must be "first", "second", or "tie". Output the JSON object directly without any other explanations or markdown code block markers.\
"""

TEMPLATES: dict[str, PromptTemplate] = {
    t.id: t
    for t in (
        PromptTemplate("UPDATE_RELATION", UPDATE_RELATION),
        PromptTemplate("UPDATE_PROFILE", UPDATE_PROFILE),
        PromptTemplate("GENERATE_SPATIAL_POSITIONING", GENERATE_SPATIAL_POSITIONING),
        PromptTemplate("FIND_NEW_ROLE_INFO", FIND_NEW_ROLE_INFO),
        PromptTemplate("GENESIS_WORLD", GENESIS_WORLD),
        PromptTemplate("GENESIS_ROSTER", GENESIS_ROSTER),
        PromptTemplate("GENESIS_SPINE_SNP", GENESIS_SPINE_SNP),
        PromptTemplate("GENESIS_SPINE_HDP", GENESIS_SPINE_HDP),
        PromptTemplate("EVENT_PLAN", EVENT_PLAN),
        PromptTemplate("ALIGN_REPAIR", ALIGN_REPAIR),
        PromptTemplate("DIRECTOR_GUIDANCE", DIRECTOR_GUIDANCE),
        PromptTemplate("ROLE_TURN", ROLE_TURN),
        PromptTemplate("SPARK_VALIDATION", SPARK_VALIDATION),
        PromptTemplate("COMPLETION_CHECK", COMPLETION_CHECK),
        PromptTemplate("JUDGE_PAIRWISE", JUDGE_PAIRWISE),
    )
}


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise KeyError(f"unknown template id: {template_id!r}") from None


def render_prompt(template: str | PromptTemplate, bindings: dict[str, object]) -> str:
    if isinstance(template, str):
        template = get_template(template)
    return template.render(bindings)
