import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    setupFiles: ['test/setup.ts'],
    // the UI lifecycle test starts a real node subprocess
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
