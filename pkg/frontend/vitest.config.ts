import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    exclude: ["tests/e2e.live.test.ts", "node_modules/**"],
    testTimeout: 15000,
  },
});
