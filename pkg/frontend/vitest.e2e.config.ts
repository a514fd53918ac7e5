import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/e2e.live.test.ts"],
    testTimeout: 60000,
    hookTimeout: 60000,
  },
});
