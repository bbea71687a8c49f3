import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    globalSetup: ["tests/setup.ts"],
    testTimeout: 60000,
    hookTimeout: 60000,
    // the integration suite shares one server; keep files sequential
    fileParallelism: false,
  },
});
