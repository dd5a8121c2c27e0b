/** Wire types for the orchestration service API. */

export interface ErrorTriple {
  error_kind: string;
  field_path: string | null;
  message: string;
}

export interface TaskRequestDoc {
  task_key: string;
  task_type: string;
  depends_on?: string[];
  input_data?: string[];
}

export interface IntentDoc {
  schema_version: string;
  intent_id?: string;
  goal?: string;
  task_requests: TaskRequestDoc[];
  latency_budget_ms: number;
  utilization_budget: number;
  combination_count: number;
}

export interface GraphNode {
  task_key: string;
  task_type: string;
  depends_on: string[];
  input_data: string[];
  params: Record<string, string>;
}

export interface GraphDoc {
  graph_id: string;
  shape: string;
  nodes: GraphNode[];
}

export interface CombinationDoc {
  rank: number;
  assignment: Record<string, string>;
  critical_path_latency_ms: number;
  peak_utilization: number;
}

export interface TaskResultDoc {
  status: "ok" | "failed";
  simulated_latency_ms: number;
  output?: string;
  error?: { code: string; message: string };
}

export interface RecordDoc {
  run_id: string;
  rank: number;
  wall_status: "complete" | "aborted";
  observed_critical_path_ms: number;
  observed_peak_utilization: number;
  results: Record<string, TaskResultDoc>;
}

export interface ReasonDoc {
  stage: string;
  code: string;
  message: string;
}

export interface ScoresDoc {
  planning: number;
  selection: number;
  execution: number;
  reasons: ReasonDoc[];
}

export interface FinalEntryDoc {
  rank: number;
  assignment: Record<string, string>;
  planned: { critical_path_latency_ms: number; peak_utilization: number };
  observed: { critical_path_latency_ms: number; peak_utilization: number } | null;
  status: string;
}

export interface FinalReportDoc {
  run_id: string;
  combinations: FinalEntryDoc[];
  best_rank: number | null;
}

export interface RunPayload {
  run_id: string;
  phase: string;
  source: string;
  session_id: string | null;
  created_at: number;
  intent: IntentDoc | null;
  utterance: string | null;
  graph: GraphDoc | null;
  stages: string[][] | null;
  validation: { shape: string; findings: unknown[] } | null;
  combinations: CombinationDoc[];
  records: RecordDoc[];
  scores: ScoresDoc | null;
  summary: string | null;
  final_report: FinalReportDoc | null;
  error: ErrorTriple | null;
  last_output_name: string | null;
}

export interface RunListEntry {
  run_id: string;
  phase: string;
  source: string;
  session_id: string | null;
  created_at: number;
}

export interface ChatEntryDoc {
  role: "user" | "system";
  text: string;
  timestamp: number;
}

export interface SessionPayload {
  session_id: string;
  last_run_id: string | null;
  chat_log: ChatEntryDoc[];
}

export const TERMINAL_PHASES = new Set(["done", "failed"]);
