import { afterEach, describe, expect, it, vi } from "vitest";
import { ApiError, getEntry, listEntries } from "../src/api.js";
import { entry, stubFetch } from "./helpers.js";

afterEach(() => vi.unstubAllGlobals());

describe("api client", () => {
  it("builds query strings only from set filters", async () => {
    const fetchMock = stubFetch({ "api/entries?sample=BA_01&kind=main": [entry()] });
    await listEntries({ sample: "BA_01", kind: "main" });
    expect(String(fetchMock.mock.calls[0]![0])).toBe("api/entries?sample=BA_01&kind=main");
  });

  it("raises ApiError carrying the server's code, message and status", async () => {
    stubFetch({
      "api/entries/999": () => ({
        status: 404,
        body: { error: { code: "not_found", message: "entry 999 not found" } },
      }),
    });
    const failure = await getEntry(999).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.code).toBe("not_found");
    expect(failure.message).toBe("entry 999 not found");
    expect(failure.status).toBe(404);
  });

  it("maps a network failure to an 'unreachable' ApiError", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => {
        throw new TypeError("connection refused");
      }),
    );
    const failure = await listEntries().catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.code).toBe("unreachable");
  });
});
