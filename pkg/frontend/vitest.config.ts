import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the service suite stages fixture projects and boots a real server
    testTimeout: 30_000,
    hookTimeout: 120_000,
  },
});
