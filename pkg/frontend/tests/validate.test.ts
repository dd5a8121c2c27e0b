import { describe, expect, it } from "vitest";

import { validateIntentDocument } from "../src/validate";
import { gatewayErrorCases, validIntent } from "./fixtures";

describe("client-side intent validation", () => {
  it("accepts the valid fixture intent", () => {
    expect(validateIntentDocument(validIntent())).toEqual([]);
  });

  it("rejects non-object documents at the root", () => {
    const errors = validateIntentDocument([1, 2, 3]);
    expect(errors[0]?.error_kind).toBe("SchemaViolation");
    expect(errors[0]?.field_path).toBe("$");
  });

  // The gateway_errors fixture is generated by running the server-side
  // parser over mutated documents; the client must report the same error
  // kind at the same field path, first.
  for (const testCase of gatewayErrorCases()) {
    it(`mirrors the gateway on ${testCase.name}`, () => {
      const errors = validateIntentDocument(testCase.document);
      expect(errors.length).toBeGreaterThan(0);
      expect(errors[0]?.error_kind).toBe(testCase.error.error_kind);
      expect(errors[0]?.field_path).toBe(testCase.error.field_path);
    });
  }

  it("reports several independent field errors for inline display", () => {
    const doc = {
      ...validIntent(),
      latency_budget_ms: -5,
      utilization_budget: 2,
    };
    const errors = validateIntentDocument(doc);
    const paths = errors.map((e) => e.field_path);
    expect(paths).toContain("latency_budget_ms");
    expect(paths).toContain("utilization_budget");
  });
});
