import { z } from "zod";

// Stream records as persisted and streamed by the run service. Every record
// carries a monotone per-run `seq` and a `kind` discriminator.

export const RelationEdge = z.object({
  relation: z.array(z.string()),
  detail: z.string(),
});
export type RelationEdge = z.infer<typeof RelationEdge>;

export const TurnEvent = z.object({
  seq: z.number(),
  kind: z.literal("turn"),
  turn_id: z.number(),
  event_id: z.string(),
  scene_id: z.string(),
  round: z.number(),
  role_code: z.string(),
  speaker_name: z.string(),
  spatial_anchor: z.string(),
  action: z.string(),
  utterance: z.string(),
  rsb_hash: z.string(),
  llm_call_ids: z.array(z.number()),
  duration: z.number(),
  source: z.enum(["agent", "player"]),
});
export type TurnEvent = z.infer<typeof TurnEvent>;

export const LayoutEvent = z.object({
  seq: z.number(),
  kind: z.literal("layout"),
  event_id: z.string(),
  scene_id: z.string(),
  round: z.number(),
  layout: z.object({
    spatial_layout: z.string(),
    positions: z.record(
      z.object({
        position: z.string(),
        posture: z.string(),
        facing: z.string(),
        relation_to_scene: z.string(),
      }),
    ),
  }),
  verdict: z.object({
    status: z.string(),
    failures: z.array(z.string()),
    renames: z.record(z.string()),
    sparks: z.array(z.string()),
    warnings: z.array(z.string()),
  }),
});
export type LayoutEvent = z.infer<typeof LayoutEvent>;

export const SparkEvent = z.object({
  seq: z.number(),
  kind: z.literal("spark"),
  spark_id: z.string(),
  raw_name: z.string(),
  event_id: z.string(),
  detection_site: z.string(),
  state: z.string(),
  resolved_code: z.string().nullable(),
  score: z.number().nullable(),
  transitions: z.array(z.string()),
  decided_by: z.string().nullable(),
});
export type SparkEvent = z.infer<typeof SparkEvent>;

export const PromotionRequestEvent = z.object({
  seq: z.number(),
  kind: z.literal("promotion_request"),
  spark_id: z.string(),
  raw_name: z.string(),
  event_id: z.string(),
  score: z.number().nullable(),
  director_decision: z.boolean(),
});
export type PromotionRequestEvent = z.infer<typeof PromotionRequestEvent>;

export const MetabolismEvent = z.object({
  seq: z.number(),
  kind: z.literal("metabolism"),
  role_code: z.string(),
  event_id: z.string(),
  status: z.string(),
  reason: z.string(),
  intensity: z.number(),
  pre_hash: z.string(),
  post_hash: z.string(),
  relations_changed: z.array(z.string()),
  profile_changed: z.boolean(),
  relations: z.record(RelationEdge),
});
export type MetabolismEvent = z.infer<typeof MetabolismEvent>;

export const NodeCompletedEvent = z.object({
  seq: z.number(),
  kind: z.literal("node_completed"),
  event_id: z.string(),
  node_id: z.string(),
});
export type NodeCompletedEvent = z.infer<typeof NodeCompletedEvent>;

export const RunStatusEvent = z
  .object({
    seq: z.number(),
    kind: z.literal("run_status"),
    phase: z.string(),
  })
  .passthrough();
export type RunStatusEvent = z.infer<typeof RunStatusEvent>;

export const StreamEvent = z.discriminatedUnion("kind", [
  TurnEvent,
  LayoutEvent,
  SparkEvent,
  PromotionRequestEvent,
  MetabolismEvent,
  NodeCompletedEvent,
  RunStatusEvent,
]);
export type StreamEvent = z.infer<typeof StreamEvent>;

export const RunHandle = z
  .object({
    run_id: z.string(),
    status: z.string(),
    interactive: z.boolean(),
    paradigm: z.string(),
    event_cursor: z.number(),
    event_budget: z.number(),
    turns: z.number(),
    seq: z.number(),
    error: z.string().nullable(),
  })
  .passthrough();
export type RunHandle = z.infer<typeof RunHandle>;

export const RunDescription = RunHandle.extend({
  roster: z.array(
    z.object({
      role_code: z.string(),
      name: z.string(),
      nickname: z.string(),
      tier: z.string(),
      origin: z.string(),
    }),
  ),
  locations: z.array(z.string()),
  social_graph: z.record(z.record(RelationEdge)),
  occupancy: z.record(z.array(z.string())),
  pending_promotions: z.array(z.string()),
});
export type RunDescription = z.infer<typeof RunDescription>;

export const ActionAck = z.object({
  run_id: z.string(),
  turn_id: z.number(),
  queued: z.boolean(),
});
export type ActionAck = z.infer<typeof ActionAck>;

export const PromotionAck = z.object({
  run_id: z.string(),
  spark_id: z.string(),
  approved: z.boolean(),
});
export type PromotionAck = z.infer<typeof PromotionAck>;
