import { defineConfig } from 'vitest/config'

export default defineConfig({
  test: {
    environment: 'node',
    include: ['tests/**/*.test.ts'],
    // the integration test boots the real Python service in a child process
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
})
