/**
 * Client-side intent validation mirroring the gateway, check for check and
 * in the same order, so inline errors carry exactly the field paths the
 * server would return.  The first element of the returned list is always
 * the error the gateway itself would raise.
 */

import type { ErrorTriple } from "./types";

const TOP_LEVEL_KEYS = new Set([
  "schema_version",
  "intent_id",
  "goal",
  "task_requests",
  "latency_budget_ms",
  "utilization_budget",
  "combination_count",
]);

const REQUIRED_KEYS = [
  "schema_version",
  "task_requests",
  "latency_budget_ms",
  "utilization_budget",
  "combination_count",
];

const ITEM_KEYS = new Set(["task_key", "task_type", "depends_on", "input_data"]);

function schema(path: string, message: string): ErrorTriple {
  return { error_kind: "SchemaViolation", field_path: path, message };
}

function constraint(path: string, message: string): ErrorTriple {
  return { error_kind: "ConstraintViolation", field_path: path, message };
}

function typeName(value: unknown): string {
  if (value === null) return "null";
  if (Array.isArray(value)) return "list";
  return typeof value;
}

function isPlainObject(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isNumber(value: unknown): value is number {
  return typeof value === "number" && Number.isFinite(value);
}

interface ParsedItem {
  task_key: string;
  depends_on: string[];
}

function validateItem(raw: unknown, path: string,
                      errors: ErrorTriple[]): ParsedItem | null {
  if (!isPlainObject(raw)) {
    errors.push(schema(path, `expected an object, got ${typeName(raw)}`));
    return null;
  }
  const unknown = Object.keys(raw).filter((k) => !ITEM_KEYS.has(k)).sort();
  if (unknown.length) {
    errors.push(schema(`${path}.${unknown[0]}`, `unknown field '${unknown[0]}'`));
    return null;
  }
  for (const required of ["task_key", "task_type"]) {
    if (!(required in raw)) {
      errors.push(schema(`${path}.${required}`,
                         `missing required field '${required}'`));
      return null;
    }
  }
  for (const field of ["task_key", "task_type"]) {
    const value = raw[field];
    if (typeof value !== "string") {
      errors.push(schema(`${path}.${field}`,
                         `expected a string, got ${typeName(value)}`));
      return null;
    }
    if (!value) {
      errors.push(constraint(`${path}.${field}`, `${field} must be non-empty`));
      return null;
    }
  }
  for (const field of ["depends_on", "input_data"]) {
    const value = raw[field] ?? [];
    if (!Array.isArray(value)) {
      errors.push(schema(`${path}.${field}`,
                         `expected a list, got ${typeName(value)}`));
      return null;
    }
    for (let j = 0; j < value.length; j += 1) {
      if (typeof value[j] !== "string") {
        errors.push(schema(`${path}.${field}[${j}]`,
                           `expected a string, got ${typeName(value[j])}`));
        return null;
      }
    }
  }
  const deps = [...new Set((raw.depends_on as string[] | undefined) ?? [])].sort();
  return { task_key: raw.task_key as string, depends_on: deps };
}

/** Validate a parsed intent document; an empty result means the gateway
 * would accept it. */
export function validateIntentDocument(value: unknown): ErrorTriple[] {
  const errors: ErrorTriple[] = [];
  if (!isPlainObject(value)) {
    return [schema("$", `top level must be an object, got ${typeName(value)}`)];
  }

  const unknown = Object.keys(value).filter((k) => !TOP_LEVEL_KEYS.has(k)).sort();
  if (unknown.length) {
    errors.push(schema(unknown[0]!, `unknown field '${unknown[0]}'`));
  }
  for (const required of REQUIRED_KEYS) {
    if (!(required in value)) {
      errors.push(schema(required, `missing required field '${required}'`));
    }
  }

  if ("schema_version" in value) {
    if (typeof value.schema_version !== "string") {
      errors.push(schema("schema_version",
                         `expected a string, got ${typeName(value.schema_version)}`));
    } else if (value.schema_version !== "1") {
      errors.push(schema(
        "schema_version",
        `unsupported schema_version '${value.schema_version}' (expected '1')`));
    }
  }
  if ("intent_id" in value) {
    if (typeof value.intent_id !== "string") {
      errors.push(schema("intent_id",
                         `expected a string, got ${typeName(value.intent_id)}`));
    } else if (!value.intent_id) {
      errors.push(constraint("intent_id", "intent_id must be non-empty when given"));
    }
  }
  if ("goal" in value && typeof value.goal !== "string") {
    errors.push(schema("goal", `expected a string, got ${typeName(value.goal)}`));
  }

  if ("task_requests" in value) {
    if (!Array.isArray(value.task_requests)) {
      errors.push(schema("task_requests",
                         `expected a list, got ${typeName(value.task_requests)}`));
    } else {
      const items: ParsedItem[] = [];
      let itemError = false;
      for (let i = 0; i < value.task_requests.length; i += 1) {
        const parsed = validateItem(value.task_requests[i],
                                    `task_requests[${i}]`, errors);
        if (parsed === null) {
          itemError = true;
          break; // the gateway stops at the first bad item
        }
        items.push(parsed);
      }
      if (!itemError) {
        if (!items.length) {
          errors.push(constraint("task_requests",
                                 "task_requests must be non-empty"));
        } else {
          const seen = new Map<string, number>();
          let structural = false;
          for (let i = 0; i < items.length; i += 1) {
            const key = items[i]!.task_key;
            if (seen.has(key)) {
              errors.push(constraint(
                `task_requests[${i}].task_key`,
                `duplicate task_key '${key}' (first at task_requests[${seen.get(key)}])`));
              structural = true;
              break;
            }
            seen.set(key, i);
          }
          if (!structural) {
            const keys = new Set(items.map((item) => item.task_key));
            outer: for (let i = 0; i < items.length; i += 1) {
              const item = items[i]!;
              for (let j = 0; j < item.depends_on.length; j += 1) {
                const dep = item.depends_on[j]!;
                if (dep === item.task_key) {
                  errors.push(constraint(
                    `task_requests[${i}].depends_on`,
                    `task '${item.task_key}' depends on itself`));
                  break outer;
                }
                if (!keys.has(dep)) {
                  errors.push(constraint(
                    `task_requests[${i}].depends_on[${j}]`,
                    `depends_on references unknown task_key '${dep}'`));
                  break outer;
                }
              }
            }
          }
        }
      }
    }
  }

  if ("latency_budget_ms" in value) {
    if (typeof value.latency_budget_ms === "boolean"
        || !isNumber(value.latency_budget_ms)) {
      errors.push(schema("latency_budget_ms",
                         `expected a number, got ${typeName(value.latency_budget_ms)}`));
    } else if (value.latency_budget_ms < 0) {
      errors.push(constraint("latency_budget_ms",
                             "latency_budget_ms must be >= 0"));
    }
  }
  if ("utilization_budget" in value) {
    if (typeof value.utilization_budget === "boolean"
        || !isNumber(value.utilization_budget)) {
      errors.push(schema("utilization_budget",
                         `expected a number, got ${typeName(value.utilization_budget)}`));
    } else if (value.utilization_budget < 0 || value.utilization_budget > 1) {
      errors.push(constraint("utilization_budget",
                             "utilization_budget must be within [0, 1]"));
    }
  }
  if ("combination_count" in value) {
    if (typeof value.combination_count === "boolean"
        || !Number.isInteger(value.combination_count)) {
      errors.push(schema("combination_count",
                         `expected an integer, got ${typeName(value.combination_count)}`));
    } else if ((value.combination_count as number) < 1) {
      errors.push(constraint("combination_count",
                             "combination_count must be >= 1"));
    }
  }
  return errors;
}
